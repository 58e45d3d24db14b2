//! Exact continuous-time kinetic Monte Carlo for the diagonal effective
//! model (Gillespie's direct method).
//!
//! Valid because the purely dissipative effective Lindbladian keeps diagonal
//! states diagonal: populations follow a classical Markov jump process whose
//! events are directed hops up_j down_{j+1} -> down_j up_{j+1}.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::effective::EffectiveModel;
use crate::error::{Error, Result};

/// Spin configuration as a bitset; bit j set = site j up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    pub n: usize,
    words: Vec<u64>,
}

impl SpinConfig {
    pub fn all_down(n: usize) -> Self {
        Self { n, words: vec![0; n.div_ceil(64)] }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut c = Self::all_down(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b {
                c.set(j, true);
            }
        }
        c
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut c = Self::all_down(n);
        for j in 0..n {
            if rng.gen::<bool>() {
                c.set(j, true);
            }
        }
        c
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, v: bool) {
        let w = &mut self.words[j / 64];
        if v {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Basis index in the nuclear-chain layout (site 1 most significant,
    /// level 0 = up). Only valid for n <= 20ish.
    pub fn basis_index(&self) -> usize {
        let mut idx = 0usize;
        for j in 0..self.n {
            idx = idx * 2 + usize::from(!self.get(j));
        }
        idx
    }

    pub fn polarizations(&self) -> Vec<f64> {
        (0..self.n).map(|j| if self.get(j) { 1.0 } else { -1.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KmcEvent {
    pub t: f64,
    pub bond: usize,
}

#[derive(Debug, Clone)]
pub struct KmcResult {
    /// Configuration at every requested sample time.
    pub samples: Vec<SpinConfig>,
    pub final_config: SpinConfig,
    pub n_events: usize,
    /// Full event log when requested.
    pub events: Vec<KmcEvent>,
}

pub struct KmcOptions {
    pub record_events: bool,
    /// Safety cap on the number of events.
    pub max_events: usize,
}

impl Default for KmcOptions {
    fn default() -> Self {
        Self { record_events: false, max_events: 100_000_000 }
    }
}

/// Run one KMC trajectory to `t_max`, sampling the configuration at the
/// given ascending times.
pub fn run_kmc(
    model: &EffectiveModel,
    config0: &SpinConfig,
    t_max: f64,
    sample_times: &[f64],
    rng: &mut ChaCha12Rng,
    opts: &KmcOptions,
) -> Result<KmcResult> {
    model.validate()?;
    if !model.is_purely_dissipative() {
        return Err(Error::InvalidModel(
            "KMC needs a purely dissipative model; coherent bonds require the quantum solver"
                .into(),
        ));
    }
    if config0.n != model.n_sites {
        return Err(Error::DimensionMismatch("configuration size vs model".into()));
    }
    for &t in sample_times {
        if !(0.0..=t_max).contains(&t) {
            return Err(Error::InvalidModel("sample time outside [0, t_max]".into()));
        }
    }
    let uniform_rate = model.uniform_rate();
    let bonds = &model.directed_bonds;
    let n_bonds = bonds.len();

    let mut config = config0.clone();
    // enabled bond bookkeeping with O(1) updates
    let enabled = |cfg: &SpinConfig, b: usize| cfg.get(bonds[b].from) && !cfg.get(bonds[b].to);
    let mut enabled_list: Vec<usize> = Vec::with_capacity(n_bonds);
    let mut pos: Vec<Option<usize>> = vec![None; n_bonds];
    let mut total_rate = 0.0_f64;
    for b in 0..n_bonds {
        if enabled(&config, b) {
            pos[b] = Some(enabled_list.len());
            enabled_list.push(b);
            total_rate += bonds[b].rate;
        }
    }
    // bonds whose enabled-status can change when site j flips
    let mut bonds_at_site: Vec<Vec<usize>> = vec![Vec::new(); model.n_sites];
    for (b, bond) in bonds.iter().enumerate() {
        bonds_at_site[bond.from].push(b);
        bonds_at_site[bond.to].push(b);
    }

    let mag0 = config.popcount();
    let mut t = 0.0_f64;
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut sample_iter = sample_times.iter().peekable();
    let mut events = Vec::new();
    let mut n_events = 0usize;

    loop {
        let dt = if total_rate > 0.0 {
            -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / total_rate
        } else {
            f64::INFINITY
        };
        let t_next = t + dt;
        while let Some(&&ts) = sample_iter.peek() {
            if ts < t_next.min(t_max) || (t_next >= t_max && ts <= t_max) {
                samples.push(config.clone());
                sample_iter.next();
            } else {
                break;
            }
        }
        if t_next >= t_max {
            break;
        }
        t = t_next;
        // select the firing bond
        let fired = if let Some(r) = uniform_rate {
            debug_assert!(r > 0.0);
            enabled_list[rng.gen_range(0..enabled_list.len())]
        } else {
            let mut x = rng.gen::<f64>() * total_rate;
            let mut chosen = enabled_list[enabled_list.len() - 1];
            for &b in &enabled_list {
                x -= bonds[b].rate;
                if x <= 0.0 {
                    chosen = b;
                    break;
                }
            }
            chosen
        };
        let (sf, st) = (bonds[fired].from, bonds[fired].to);
        config.set(sf, false);
        config.set(st, true);
        n_events += 1;
        if opts.record_events {
            events.push(KmcEvent { t, bond: fired });
        }
        if n_events > opts.max_events {
            return Err(Error::IntegrationFailure("KMC event cap exceeded".into()));
        }
        // update enabled set around the two flipped sites
        for &b in bonds_at_site[sf].iter().chain(bonds_at_site[st].iter()) {
            let now = enabled(&config, b);
            match (pos[b], now) {
                (None, true) => {
                    pos[b] = Some(enabled_list.len());
                    enabled_list.push(b);
                    total_rate += bonds[b].rate;
                }
                (Some(p), false) => {
                    let last = enabled_list.len() - 1;
                    let moved = enabled_list[last];
                    enabled_list.swap(p, last);
                    enabled_list.pop();
                    if moved != b {
                        pos[moved] = Some(p);
                    }
                    pos[b] = None;
                    total_rate -= bonds[b].rate;
                }
                _ => {}
            }
        }
        debug_assert_eq!(config.popcount(), mag0, "magnetization must be conserved");
    }
    // any remaining sample times equal to t_max
    for &ts in sample_iter {
        debug_assert!(ts <= t_max);
        samples.push(config.clone());
    }
    Ok(KmcResult { samples, final_config: config, n_events, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn all_down_is_frozen() {
        let model = EffectiveModel::open_chain(5, 10.0);
        let c0 = SpinConfig::all_down(5);
        let r = run_kmc(&model, &c0, 100.0, &[50.0], &mut rng(1), &KmcOptions::default())
            .unwrap();
        assert_eq!(r.n_events, 0);
        assert_eq!(r.final_config, c0);
        assert_eq!(r.samples.len(), 1);
    }

    #[test]
    fn open_chain_absorbs_to_domain_wall() {
        let model = EffectiveModel::open_chain(6, 50.0);
        let mut g = rng(42);
        for _ in 0..50 {
            let c0 = SpinConfig::random(6, &mut g);
            let k = c0.popcount();
            let r = run_kmc(&model, &c0, 10.0, &[], &mut g, &KmcOptions::default()).unwrap();
            assert_eq!(r.final_config.popcount(), k);
            // final must be a domain wall: downs (0-bits) first, then ups
            let bits: Vec<bool> = (0..6).map(|j| r.final_config.get(j)).collect();
            let first_up = bits.iter().position(|&b| b).unwrap_or(6);
            assert!(bits[first_up..].iter().all(|&b| b), "not a domain wall: {bits:?}");
        }
    }

    #[test]
    fn rejects_coherent_bonds() {
        let mut model = EffectiveModel::open_chain(3, 1.0);
        model.coherent_bonds.push(crate::effective::CoherentBond { a: 0, b: 2, j: 5.0 });
        let c0 = SpinConfig::all_down(3);
        assert!(run_kmc(&model, &c0, 1.0, &[], &mut rng(0), &KmcOptions::default()).is_err());
    }

    #[test]
    fn ring_single_excitation_exponential_waiting_times() {
        // one up spin on a ring: exactly one enabled bond at all times, so
        // inter-event times are iid Exp(rate); KS-test the sample
        let rate = 7.0;
        let model = EffectiveModel::ring(5, rate);
        let c0 = SpinConfig::from_bits(&[true, false, false, false, false]);
        let mut g = rng(7);
        let mut opts = KmcOptions::default();
        opts.record_events = true;
        let r = run_kmc(&model, &c0, 400.0, &[], &mut g, &opts).unwrap();
        assert!(r.events.len() > 1000);
        let mut gaps: Vec<f64> = Vec::with_capacity(r.events.len());
        let mut prev = 0.0;
        for e in &r.events {
            gaps.push(e.t - prev);
            prev = e.t;
        }
        let p = ks_test_exponential(&gaps, rate);
        assert!(p > 0.01, "KS p-value {p:.4} too small");
    }

    /// Kolmogorov-Smirnov test against Exp(rate); returns the asymptotic
    /// p-value.
    pub fn ks_test_exponential(samples: &[f64], rate: f64) -> f64 {
        let mut s: Vec<f64> = samples.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len() as f64;
        let mut d = 0.0_f64;
        for (i, &x) in s.iter().enumerate() {
            let cdf = 1.0 - (-rate * x).exp();
            let emp_hi = (i as f64 + 1.0) / n;
            let emp_lo = i as f64 / n;
            d = d.max((cdf - emp_lo).abs()).max((emp_hi - cdf).abs());
        }
        let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
        // Kolmogorov asymptotic survival function
        let mut q = 0.0_f64;
        for k in 1..=100 {
            let kf = k as f64;
            q += 2.0 * (-1.0_f64).powi(k + 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        }
        q.clamp(0.0, 1.0)
    }
}
