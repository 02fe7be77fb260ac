//! Classic Bloom filter: bit array, double-hashing family, and the sizing
//! math linking `m`, `n`, `k` and the target false positive rate.

use crate::codec::{self, CodecError};

const LN2: f64 = std::f64::consts::LN_2;

/// Role of a filter inside a larger structure, recorded in the serialized header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum LayerTag {
    Classic = 0,
    Initial = 1,
    Backup = 2,
}

impl LayerTag {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(LayerTag::Classic),
            1 => Some(LayerTag::Initial),
            2 => Some(LayerTag::Backup),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BloomError {
    #[error("target_fpr must lie in (0,1), got {0}")]
    FprOutOfRange(f64),
    #[error("n_keys must be >= 1")]
    ZeroKeys,
    #[error("m_bits must be >= 1")]
    ZeroBits,
    #[error("cannot build a Bloom filter on an empty key set")]
    EmptyKeySet,
}

/// Derived sizing for a filter holding `n_keys` at `target_fpr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizingSpec {
    pub n_keys: u64,
    pub target_fpr: f64,
    pub m_bits: u64,
    pub k: u32,
}

impl SizingSpec {
    pub fn for_keys(n_keys: u64, target_fpr: f64) -> Result<Self, BloomError> {
        let m_bits = bf_size_for(n_keys, target_fpr)?;
        let k = bf_optimal_k(m_bits, n_keys)?;
        Ok(SizingSpec { n_keys, target_fpr, m_bits, k })
    }
}

/// m = ceil(n * ln(1/eps) / (ln 2)^2), the space-optimal bit count.
pub fn bf_size_for(n_keys: u64, target_fpr: f64) -> Result<u64, BloomError> {
    if n_keys == 0 {
        return Err(BloomError::ZeroKeys);
    }
    if !(target_fpr > 0.0 && target_fpr < 1.0) {
        return Err(BloomError::FprOutOfRange(target_fpr));
    }
    let m = (n_keys as f64) * (1.0 / target_fpr).ln() / (LN2 * LN2);
    Ok(m.ceil() as u64)
}

/// k = max(1, round((m/n) * ln 2)).
pub fn bf_optimal_k(m_bits: u64, n_keys: u64) -> Result<u32, BloomError> {
    if n_keys == 0 {
        return Err(BloomError::ZeroKeys);
    }
    if m_bits == 0 {
        return Err(BloomError::ZeroBits);
    }
    let k = ((m_bits as f64 / n_keys as f64) * LN2).round() as u32;
    Ok(k.max(1))
}

/// Seeded 64-bit hash: FNV-1a over the bytes followed by a 64-bit finalizer
/// for avalanche. Stable across platforms and releases.
fn hash64(data: &[u8], seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// Probe positions for `key`: i_j = (h1 + j*h2) mod m, j in 0..k, with h2
/// forced odd so the stride never degenerates on power-of-two m.
pub fn hash_indices(key: &[u8], k: u32, m_bits: u64, seed: u64) -> Vec<u64> {
    debug_assert!(m_bits >= 1);
    let h1 = hash64(key, seed);
    let h2 = hash64(key, seed ^ 0xa076_1d64_78bd_642f) | 1;
    (0..k as u64)
        .map(|j| h1.wrapping_add(j.wrapping_mul(h2)) % m_bits)
        .collect()
}

/// Classic Bloom filter. Immutable once built; queries never mutate.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    m_bits: u64,
    k: u32,
    seed: u64,
    n_inserted: u64,
}

impl BloomFilter {
    /// Build a filter over `keys`, sized by `bf_size_for` / `bf_optimal_k`.
    pub fn build<K: AsRef<[u8]>>(
        keys: &[K],
        target_fpr: f64,
        seed: u64,
    ) -> Result<Self, BloomError> {
        if keys.is_empty() {
            return Err(BloomError::EmptyKeySet);
        }
        let spec = SizingSpec::for_keys(keys.len() as u64, target_fpr)?;
        Ok(Self::build_sized(keys, spec.m_bits, spec.k, seed))
    }

    /// Build with explicit geometry.
    pub fn build_sized<K: AsRef<[u8]>>(keys: &[K], m_bits: u64, k: u32, seed: u64) -> Self {
        assert!(m_bits >= 1 && k >= 1);
        let words = m_bits.div_ceil(64) as usize;
        let mut filter = BloomFilter {
            bits: vec![0u64; words],
            m_bits,
            k,
            seed,
            n_inserted: 0,
        };
        for key in keys {
            for idx in hash_indices(key.as_ref(), k, m_bits, seed) {
                filter.bits[(idx / 64) as usize] |= 1u64 << (idx % 64);
            }
            filter.n_inserted += 1;
        }
        filter
    }

    /// `false` means definitely not a member; `true` means possibly a member.
    pub fn query(&self, key: &[u8]) -> bool {
        hash_indices(key, self.k, self.m_bits, self.seed)
            .into_iter()
            .all(|idx| self.bits[(idx / 64) as usize] >> (idx % 64) & 1 == 1)
    }

    pub fn m_bits(&self) -> u64 {
        self.m_bits
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_inserted(&self) -> u64 {
        self.n_inserted
    }

    /// Bit-array payload in bytes: ceil(m/8). This is the "size" used in
    /// baseline comparisons; the header is accounted for separately.
    pub fn payload_bytes(&self) -> u64 {
        self.m_bits.div_ceil(8)
    }

    /// Header: magic + version + layer tag + m_bits + k + seed + n_inserted.
    pub const HEADER_BYTES: u64 = 4 + 1 + 1 + 8 + 4 + 8 + 8;

    pub fn serialized_bytes(&self) -> u64 {
        Self::HEADER_BYTES + self.payload_bytes()
    }

    /// Encode as: magic "LBF1", version byte, layer tag, LE u64 m_bits,
    /// u32 k, u64 seed, u64 n_inserted, raw bit payload.
    pub fn encode(&self, tag: LayerTag) -> Vec<u8> {
        let payload_len = self.payload_bytes() as usize;
        let mut out = Vec::with_capacity(Self::HEADER_BYTES as usize + payload_len);
        out.extend_from_slice(b"LBF1");
        out.push(codec::FORMAT_VERSION);
        out.push(tag as u8);
        out.extend_from_slice(&self.m_bits.to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.n_inserted.to_le_bytes());
        let mut payload = Vec::with_capacity(self.bits.len() * 8);
        for word in &self.bits {
            payload.extend_from_slice(&word.to_le_bytes());
        }
        payload.truncate(payload_len);
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<(Self, LayerTag), CodecError> {
        let mut r = codec::Reader::new(bytes);
        r.expect_magic(b"LBF1")?;
        r.expect_version()?;
        let tag = LayerTag::from_u8(r.u8()?)
            .ok_or_else(|| CodecError::Corrupt("unknown layer tag".into()))?;
        let m_bits = r.u64()?;
        let k = r.u32()?;
        let seed = r.u64()?;
        let n_inserted = r.u64()?;
        if m_bits == 0 || k == 0 {
            return Err(CodecError::Corrupt("zero filter geometry".into()));
        }
        let payload_len = m_bits.div_ceil(8) as usize;
        let payload = r.bytes(payload_len)?;
        let words = m_bits.div_ceil(64) as usize;
        let mut bits = vec![0u64; words];
        for (i, chunk) in payload.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            bits[i] = u64::from_le_bytes(buf);
        }
        r.expect_end()?;
        Ok((
            BloomFilter { bits, m_bits, k, seed, n_inserted },
            tag,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_keys(count: usize, len: usize, seed: u64) -> Vec<Vec<u8>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..len).map(|_| rng.gen::<u8>()).collect())
            .collect()
    }

    #[test]
    fn size_matches_reference_points() {
        // 43744 keys at the four reference rates; sizes in KB = bits/8/1024.
        let cases = [(0.001, 76.8), (0.005, 58.9), (0.01, 51.2), (0.02, 43.5)];
        for (eps, kb) in cases {
            let m = bf_size_for(43744, eps).unwrap();
            let got_kb = m as f64 / 8.0 / 1024.0;
            assert!(
                (got_kb - kb).abs() / kb < 0.005,
                "eps={eps}: {got_kb} KB vs {kb} KB"
            );
        }
        // ceil(43744 * ln(100) / ln(2)^2)
        assert_eq!(bf_size_for(43744, 0.01).unwrap(), 419_289);
    }

    #[test]
    fn size_minimal_case() {
        assert_eq!(bf_size_for(1, 0.5).unwrap(), 2);
    }

    #[test]
    fn size_rejects_bad_domain() {
        assert_eq!(bf_size_for(0, 0.1), Err(BloomError::ZeroKeys));
        assert_eq!(bf_size_for(10, 0.0), Err(BloomError::FprOutOfRange(0.0)));
        assert_eq!(bf_size_for(10, 1.0), Err(BloomError::FprOutOfRange(1.0)));
    }

    #[test]
    fn optimal_k_reference_points() {
        assert_eq!(bf_optimal_k(419_285, 43744).unwrap(), 7);
        assert_eq!(bf_optimal_k(1000, 1000).unwrap(), 1);
        assert_eq!(bf_optimal_k(20_000, 1000).unwrap(), 14);
        assert_eq!(bf_optimal_k(0, 1), Err(BloomError::ZeroBits));
        assert_eq!(bf_optimal_k(1, 0), Err(BloomError::ZeroKeys));
    }

    #[test]
    fn hash_indices_deterministic_and_k1() {
        let a = hash_indices(b"example.com", 7, 1 << 20, 42);
        let b = hash_indices(b"example.com", 7, 1 << 20, 42);
        assert_eq!(a, b);
        let single = hash_indices(b"example.com", 1, 1 << 20, 42);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0], a[0]);
    }

    #[test]
    fn hash_indices_uniform_chi_square() {
        // 1e5 random keys, m = 2^20, histogram folded into 256 buckets.
        // df = 255, chi-square critical value at 99% confidence = 310.457.
        let m: u64 = 1 << 20;
        let k = 4u32;
        let keys = random_keys(100_000, 16, 7);
        let mut buckets = [0u64; 256];
        for key in &keys {
            for idx in hash_indices(key, k, m, 99) {
                buckets[(idx * 256 / m) as usize] += 1;
            }
        }
        let total: u64 = buckets.iter().sum();
        let expected = total as f64 / 256.0;
        let chi2: f64 = buckets
            .iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 310.457, "chi2 = {chi2}");
    }

    #[test]
    fn build_rejects_empty_and_has_no_false_negatives() {
        let empty: Vec<Vec<u8>> = vec![];
        assert_eq!(
            BloomFilter::build(&empty, 0.01, 0).unwrap_err(),
            BloomError::EmptyKeySet
        );
        let keys = [b"a".to_vec(), b"b".to_vec(), b"c".to_vec()];
        let f = BloomFilter::build(&keys, 0.01, 0).unwrap();
        for key in &keys {
            assert!(f.query(key));
        }
    }

    #[test]
    fn empirical_fpr_tracks_target() {
        let keys = random_keys(10_000, 16, 1);
        let f = BloomFilter::build(&keys, 0.01, 3).unwrap();
        let negatives = random_keys(100_000, 17, 2);
        let fp = negatives.iter().filter(|n| f.query(n)).count();
        let fpr = fp as f64 / negatives.len() as f64;
        assert!(
            (fpr - 0.01).abs() / 0.01 < 0.2,
            "measured FPR {fpr} outside +/-20% of 0.01"
        );
        // theoretical rate (1 - e^{-kn/m})^k should also agree
        let theo = (1.0
            - (-(f.k() as f64) * keys.len() as f64 / f.m_bits() as f64).exp())
        .powi(f.k() as i32);
        assert!((fpr - theo).abs() / theo < 0.2);
    }

    #[test]
    fn query_all_zero_filter_rejects() {
        let f = BloomFilter {
            bits: vec![0u64; 16],
            m_bits: 1024,
            k: 3,
            seed: 0,
            n_inserted: 0,
        };
        assert!(!f.query(b"anything"));
    }

    #[test]
    fn deterministic_builds_are_bit_identical() {
        let keys = random_keys(500, 12, 9);
        let a = BloomFilter::build(&keys, 0.01, 5).unwrap();
        let b = BloomFilter::build(&keys, 0.01, 5).unwrap();
        assert_eq!(a.encode(LayerTag::Classic), b.encode(LayerTag::Classic));
    }

    #[test]
    fn encode_decode_round_trip() {
        let keys = random_keys(200, 10, 4);
        let f = BloomFilter::build(&keys, 0.02, 11).unwrap();
        let blob = f.encode(LayerTag::Backup);
        assert_eq!(blob.len() as u64, f.serialized_bytes());
        let (g, tag) = BloomFilter::decode(&blob).unwrap();
        assert_eq!(tag, LayerTag::Backup);
        assert_eq!(f, g);
    }

    #[test]
    fn decode_rejects_truncated_blob() {
        let keys = random_keys(50, 8, 4);
        let f = BloomFilter::build(&keys, 0.02, 11).unwrap();
        let blob = f.encode(LayerTag::Classic);
        assert!(BloomFilter::decode(&blob[..blob.len() - 3]).is_err());
        assert!(BloomFilter::decode(b"XXXX").is_err());
    }

    proptest! {
        #[test]
        fn no_false_negatives_prop(keys in proptest::collection::vec(
            proptest::collection::vec(any::<u8>(), 1..24), 1..64)) {
            let f = BloomFilter::build(&keys, 0.05, 17).unwrap();
            for key in &keys {
                prop_assert!(f.query(key));
            }
        }

        #[test]
        fn sizing_monotone(n in 1u64..100_000, eps in 0.0005f64..0.5) {
            let m = bf_size_for(n, eps).unwrap();
            prop_assert!(bf_size_for(n + 1, eps).unwrap() >= m);
            prop_assert!(bf_size_for(n, eps * 1.5).unwrap() <= m);
        }
    }
}
