use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimized unary encoding: the true bit is kept with probability
/// `p = 1/2`, every other bit turns on with `q = 1/(e^eps + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OueParams {
    domain: usize,
    epsilon: f64,
}

impl OueParams {
    pub fn new(domain: usize, epsilon: f64) -> Result<Self> {
        if domain == 0 {
            return Err(Error::Argument("OUE domain must be non-empty".into()));
        }
        if !(epsilon > 0.0) || epsilon.is_nan() {
            return Err(Error::Argument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(OueParams { domain, epsilon })
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> f64 {
        0.5
    }

    pub fn q(&self) -> f64 {
        1.0 / (self.epsilon.exp() + 1.0)
    }

    /// Expected number of ones in an honest report: `p + (d - 1) q`.
    pub fn expected_ones(&self) -> f64 {
        self.p() + (self.domain as f64 - 1.0) * self.q()
    }

    /// Exact probability that an honest holder of `item` emits `report`.
    pub fn report_probability(&self, item: usize, report: &OueReport) -> f64 {
        let (p, q) = (self.p(), self.q());
        (0..self.domain)
            .map(|j| {
                let on = if j == item { p } else { q };
                if report.get(j) {
                    on
                } else {
                    1.0 - on
                }
            })
            .product()
    }
}

/// A length-`d` bit vector. Serializes as the domain size plus the packed
/// little-endian words in hex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "ReportRepr", try_from = "ReportRepr")]
pub struct OueReport {
    domain: usize,
    words: Vec<u64>,
}

impl OueReport {
    pub fn zeros(domain: usize) -> Self {
        OueReport {
            domain,
            words: vec![0; domain.div_ceil(64)],
        }
    }

    /// Report with exactly the given indices set.
    pub fn from_ones(domain: usize, ones: &[usize]) -> Result<Self> {
        let mut r = Self::zeros(domain);
        for &i in ones {
            if i >= domain {
                return Err(Error::Argument(format!("bit {i} outside domain {domain}")));
            }
            r.set(i);
        }
        Ok(r)
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.domain
    }

    pub fn is_empty(&self) -> bool {
        self.domain == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn from_words(domain: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != domain.div_ceil(64) {
            return Err(Error::Data("word count does not match domain".into()));
        }
        let r = OueReport { domain, words };
        if r.ones().any(|i| i >= domain) {
            return Err(Error::Data("bits set past the domain end".into()));
        }
        Ok(r)
    }
}

#[derive(Serialize, Deserialize)]
struct ReportRepr {
    d: usize,
    bits: String,
}

impl From<OueReport> for ReportRepr {
    fn from(r: OueReport) -> Self {
        let bytes: Vec<u8> = r.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        ReportRepr {
            d: r.domain,
            bits: hex::encode(bytes),
        }
    }
}

impl TryFrom<ReportRepr> for OueReport {
    type Error = Error;

    fn try_from(r: ReportRepr) -> Result<Self> {
        let bytes =
            hex::decode(&r.bits).map_err(|e| Error::Data(format!("bad report hex: {e}")))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Data(
                "report hex is not a whole number of words".into(),
            ));
        }
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        OueReport::from_words(r.d, words)
    }
}

/// `prob` as a 32-bit fixed-point threshold.
fn bernoulli_threshold(prob: f64) -> u32 {
    (prob * 4_294_967_296.0).round().min(u32::MAX as f64) as u32
}

/// 64 independent Bernoulli(thr / 2^32) bits.
///
/// Each lane compares a lazily drawn 32-bit uniform against the threshold,
/// most significant bit first; a lane is settled at its first differing bit,
/// so about half the undecided lanes resolve per draw.
fn bernoulli_word<R: RngCore + ?Sized>(thr: u32, rng: &mut R) -> u64 {
    let mut result = 0u64;
    let mut undecided = !0u64;
    for k in (0..32).rev() {
        let r = rng.next_u64();
        if thr >> k & 1 == 1 {
            result |= undecided & !r;
            undecided &= r;
        } else {
            undecided &= !r;
        }
        if undecided == 0 {
            break;
        }
    }
    result
}

/// Perturbs `item` into a unary report.
pub fn oue_perturb<R: RngCore + ?Sized>(
    item: usize,
    params: &OueParams,
    rng: &mut R,
) -> Result<OueReport> {
    let d = params.domain;
    if item >= d {
        return Err(Error::Argument(format!("item {item} outside domain {d}")));
    }
    let thr = bernoulli_threshold(params.q());
    let mut words: Vec<u64> = (0..d.div_ceil(64))
        .map(|_| bernoulli_word(thr, rng))
        .collect();
    if !d.is_multiple_of(64) {
        let last = words.len() - 1;
        words[last] &= (1u64 << (d % 64)) - 1;
    }
    let keep = rng.next_u32() & 1 == 1;
    let (wi, bi) = (item / 64, item % 64);
    if keep {
        words[wi] |= 1 << bi;
    } else {
        words[wi] &= !(1 << bi);
    }
    Ok(OueReport { domain: d, words })
}

/// Per-index ones counts over a set of equal-domain reports.
pub fn ones_counts<'a, I>(domain: usize, reports: I) -> Result<(Vec<u64>, usize)>
where
    I: IntoIterator<Item = &'a OueReport>,
{
    let mut counts = vec![0u64; domain];
    let mut n = 0usize;
    for r in reports {
        if r.domain != domain {
            return Err(Error::Argument(format!(
                "report domain {} differs from {domain}",
                r.domain
            )));
        }
        for i in r.ones() {
            counts[i] += 1;
        }
        n += 1;
    }
    Ok((counts, n))
}

/// Unbiased frequency estimates `(ones_j - n q) / (p - q)`. May be negative.
pub fn oue_aggregate(reports: &[OueReport], params: &OueParams) -> Result<Vec<f64>> {
    if reports.is_empty() {
        return Err(Error::Argument("no reports to aggregate".into()));
    }
    let (counts, n) = ones_counts(params.domain, reports)?;
    Ok(estimate_from_counts(&counts, n, params))
}

pub fn estimate_from_counts(counts: &[u64], n: usize, params: &OueParams) -> Vec<f64> {
    let (p, q) = (params.p(), params.q());
    let nq = n as f64 * q;
    counts.iter().map(|&c| (c as f64 - nq) / (p - q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn q_at_epsilon_one() {
        let p = OueParams::new(4, 1.0).unwrap();
        assert!((p.q() - 0.268_941_421_369_995).abs() < 1e-12);
    }

    #[test]
    fn report_has_domain_length() {
        let p = OueParams::new(100, 1.0).unwrap();
        let mut rng = stream(1, "t", 0);
        for d in [1usize, 63, 64, 65, 100] {
            let p = OueParams::new(d, 1.0).unwrap();
            let r = oue_perturb(0, &p, &mut rng).unwrap();
            assert_eq!(r.len(), d);
            assert!(r.ones().all(|i| i < d));
        }
        assert!(oue_perturb(100, &p, &mut rng).is_err());
    }

    #[test]
    fn large_epsilon_keeps_half() {
        let p = OueParams::new(4, 50.0).unwrap();
        let mut rng = stream(2, "t", 0);
        let mut kept = 0;
        let mut stray = 0;
        for _ in 0..10_000 {
            let r = oue_perturb(2, &p, &mut rng).unwrap();
            kept += usize::from(r.get(2));
            stray += r.ones().filter(|&i| i != 2).count();
        }
        assert_eq!(stray, 0);
        assert!((kept as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn crafted_all_on_overshoots() {
        let p = OueParams::new(3, 1.0).unwrap();
        let n = 40;
        let reports: Vec<OueReport> = (0..n)
            .map(|_| OueReport::from_ones(3, &[1]).unwrap())
            .collect();
        let est = oue_aggregate(&reports, &p).unwrap();
        let expect = (n as f64 - n as f64 * p.q()) / (p.p() - p.q());
        assert!((est[1] - expect).abs() < 1e-9);
        assert!(est[1] > n as f64);
        let zero = -(n as f64) * p.q() / (p.p() - p.q());
        assert!((est[0] - zero).abs() < 1e-9);
    }

    #[test]
    fn aggregate_rejects_empty_and_mismatch() {
        let p = OueParams::new(3, 1.0).unwrap();
        assert!(oue_aggregate(&[], &p).is_err());
        assert!(oue_aggregate(&[OueReport::zeros(4)], &p).is_err());
    }

    #[test]
    fn bernoulli_word_rate() {
        let mut rng = stream(9, "t", 0);
        for q in [0.018, 0.2689, 0.49] {
            let thr = bernoulli_threshold(q);
            let ones: u32 = (0..4000)
                .map(|_| bernoulli_word(thr, &mut rng).count_ones())
                .sum();
            let rate = ones as f64 / (4000.0 * 64.0);
            let se = (q * (1.0 - q) / 256_000.0).sqrt();
            assert!((rate - q).abs() < 4.0 * se, "q {q} rate {rate}");
        }
    }

    #[test]
    fn json_roundtrip() {
        let r = OueReport::from_ones(70, &[1, 69]).unwrap();
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<OueReport>(&js).unwrap(), r);
        assert!(serde_json::from_str::<OueReport>(r#"{"d":3,"bits":"ff00000000000000"}"#).is_err());
    }

    #[test]
    fn ones_iterator_roundtrip() {
        let r = OueReport::from_ones(130, &[0, 63, 64, 129]).unwrap();
        assert_eq!(r.ones().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(r.count_ones(), 4);
    }
}
