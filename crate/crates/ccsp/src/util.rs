//! Small shared helpers: combinatorics and seed derivation.

/// Binomial coefficient C(n, k) without overflow for the instance sizes this
/// crate handles (n <= 64 in practice).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All strictly increasing k-subsets of `items`, in lexicographic order.
pub fn k_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > items.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // advance the odometer
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != items.len() - k + pos {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        if k == 0 {
            return out;
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; used for content digests and seed derivation tags.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives an independent stream seed from a root seed and a component tag,
/// so one `--seed` drives every randomized component deterministically.
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    splitmix64(root ^ fnv1a(tag.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(64, 2), 2016);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(5, 0), 1);
    }

    #[test]
    fn subsets_are_sorted_and_complete() {
        let items = [2usize, 5, 7, 9];
        let subs = k_subsets(&items, 2);
        assert_eq!(subs.len(), 6);
        assert_eq!(subs[0], vec![2, 5]);
        assert_eq!(subs[5], vec![7, 9]);
        let all = k_subsets(&items, 4);
        assert_eq!(all, vec![vec![2, 5, 7, 9]]);
    }

    #[test]
    fn derive_seed_separates_tags() {
        assert_ne!(derive_seed(7, "sdp"), derive_seed(7, "ckr"));
        assert_eq!(derive_seed(7, "sdp"), derive_seed(7, "sdp"));
    }
}
