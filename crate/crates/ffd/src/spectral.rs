//! Single-particle content of a circuit.
//!
//! The roots of the final scalar polynomial P_M(w) sit on the negative real
//! axis, w_k = -u_k^2, and each carries a pseudoenergy eps_k = arctan(1/u_k):
//! one driving period multiplies the k-th mode by exp(2i eps_k).  This module
//! finds the roots (magnitude-blocked companion matrices, then a Newton polish
//! against the exact coefficients), forms the mode normalizations, and for the
//! three-sublattice family the overlaps of the edge operator with each mode.
//!
//! Long homogeneous chains pin modes exponentially close to the band edges,
//! so root magnitudes and normalizations can leave the double range entirely;
//! everything here is therefore carried as (mantissa, binary exponent) pairs
//! where it matters, and |w| > 1 evaluations go through the reversed
//! polynomial at 1/w.

use ndarray::Array2;

use crate::circuit::{CircuitSpec, Family};
use crate::dd::Dd;
use crate::error::{FfdError, FfdResult};
use crate::lapack::eig_real;
use crate::poly::{scalar_chain, Poly, Real, ScalarChain};
use crate::C64;

/// Relative tolerance for declaring a companion eigenvalue real.
const IMAG_TOL: f64 = 1e-8;
/// Relative separation below which two roots count as degenerate.
const SEP_TOL: f64 = 1e-10;
/// Jump in the coefficient-ratio ladder beyond which the polynomial is split
/// into separately solved magnitude blocks.
const BLOCK_GAP: f64 = 1e8;
/// Post-polish residual bound, relative to the size of the summed terms.
const RES_TOL: f64 = 1e-9;

/// Everything the dynamics needs about the modes of one circuit.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// u_k > 0, ascending.
    pub u: Vec<f64>,
    /// w_k = -u_k^2, aligned with `u`.
    pub w: Vec<f64>,
    /// Pseudoenergies arctan(1/u_k), one per mode.
    pub epsilon: Vec<f64>,
    /// Squared mode normalizations, aligned with `u`.  For modes pinned at
    /// the band edges the true value leaves the double range and this entry
    /// saturates at 0 or infinity; `norm` stays exact.
    pub n_sq: Vec<f64>,
    /// Mode normalizations sqrt(n_sq) as (mantissa, binary exponent) pairs.
    pub norm: Vec<(f64, i32)>,
    /// Squared overlap of the edge operator with the frozen mode
    /// (three-sublattice family only).
    pub c0_sq: Option<f64>,
    /// Edge-operator overlaps c_k for k >= 1; c_{-k} = c_k
    /// (three-sublattice family only).
    pub c: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn mode_count(&self) -> usize {
        self.u.len()
    }
}

/// All eigenvalues of the companion matrix of the monic version of `p`.
pub(crate) fn poly_roots(coeffs: &[f64]) -> FfdResult<Vec<C64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    if lead == 0.0 {
        return Err(FfdError::SpectralStructure(
            "leading coefficient vanishes".into(),
        ));
    }
    let mut m = Array2::<f64>::zeros((deg, deg));
    for r in 1..deg {
        m[(r, r - 1)] = 1.0;
    }
    for r in 0..deg {
        m[(r, deg - 1)] = -coeffs[r] / lead;
    }
    eig_real(&m)
}

/// Check the roots are real, strictly negative and pairwise separated, and
/// return them sorted ascending (most negative first).
pub(crate) fn real_negative_separated(roots: Vec<C64>) -> FfdResult<Vec<f64>> {
    let mut ws = Vec::with_capacity(roots.len());
    for z in roots {
        if z.im.abs() > IMAG_TOL * (1.0 + z.norm()) {
            return Err(FfdError::SpectralStructure(format!(
                "root {z} is not real"
            )));
        }
        if z.re >= 0.0 {
            return Err(FfdError::SpectralStructure(format!(
                "root {} is not negative",
                z.re
            )));
        }
        ws.push(z.re);
    }
    ws.sort_by(f64::total_cmp);
    for pair in ws.windows(2) {
        let scale = pair[0].abs().max(pair[1].abs());
        if (pair[1] - pair[0]).abs() <= SEP_TOL * scale {
            return Err(FfdError::Degeneracy(format!(
                "roots {} and {} are too close to resolve",
                pair[0], pair[1]
            )));
        }
    }
    Ok(ws)
}

/// Pull the binary exponent out of `m` so the mantissa sits near one.
pub(crate) fn norm2(m: f64, e: i32) -> (f64, i32) {
    if m == 0.0 || !m.is_finite() {
        return (m, e);
    }
    let k = m.abs().log2().round() as i32;
    let h = k / 2;
    (m * (2.0f64).powi(-h) * (2.0f64).powi(h - k), e + k)
}

/// m * 2^e, over- or underflowing gracefully.
pub(crate) fn ldexp2(m: f64, e: i32) -> f64 {
    let h = e / 2;
    m * (2.0f64).powi(h) * (2.0f64).powi(e - h)
}

/// w^n as (mantissa, binary exponent), by exact squaring.
fn pow_scaled(w: f64, n: usize) -> (f64, i32) {
    let mut acc = (1.0f64, 0i32);
    let mut base = norm2(w, 0);
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc = norm2(acc.0 * base.0, acc.1 + base.1);
        }
        base = norm2(base.0 * base.0, 2 * base.1);
        k >>= 1;
    }
    acc
}

fn reversed<T: Real>(p: &Poly<T>) -> Poly<T> {
    Poly {
        coeffs: p.coeffs.iter().rev().copied().collect(),
    }
}

/// p(w) as (mantissa, binary exponent).  Outside the unit interval the
/// reversed form p(w) = w^deg rp(1/w) keeps every intermediate representable.
fn eval_scaled<T: Real>(p: &Poly<T>, rp: &Poly<T>, w: f64) -> (f64, i32) {
    if w.abs() <= 1.0 {
        norm2(p.eval(T::from_f64(w)).to_f64(), 0)
    } else {
        let r = rp.eval(T::from_f64(1.0 / w)).to_f64();
        let (pm, pe) = pow_scaled(w, p.coeffs.len() - 1);
        norm2(r * pm, pe)
    }
}

/// Seed roots from magnitude-blocked companion matrices.
///
/// With positive coefficients and real negative roots the coefficient
/// sequence is log-concave, so the ratios a_{k-1}/a_k estimate the root
/// magnitudes in increasing order.  One companion matrix cannot resolve
/// roots spread over dozens of decades, so the list is cut wherever the
/// estimated magnitude jumps by more than [`BLOCK_GAP`] and each block is
/// solved on its own; the block truncation error, of order the inverse jump,
/// lands every seed well inside its Newton basin.
fn root_seeds(coeffs: &[f64]) -> FfdResult<Vec<f64>> {
    let deg = coeffs.len() - 1;
    let mut cuts = vec![0usize];
    if coeffs.iter().all(|&c| c > 0.0) {
        let gap = BLOCK_GAP.ln();
        for k in 1..deg {
            if 2.0 * coeffs[k].ln() - coeffs[k - 1].ln() - coeffs[k + 1].ln() > gap {
                cuts.push(k);
            }
        }
    }
    cuts.push(deg);
    let mut seeds = Vec::with_capacity(deg);
    for win in cuts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let peak = coeffs[lo..=hi]
            .iter()
            .fold(0.0f64, |acc, &c| acc.max(c.abs()));
        let block: Vec<f64> = coeffs[lo..=hi].iter().map(|c| c / peak).collect();
        for z in poly_roots(&block)? {
            seeds.push(z.re);
        }
    }
    Ok(seeds)
}

/// Accept a polished root only if the polynomial value there is small
/// relative to the terms being summed.
fn residual_ok<T: Real>(p: &Poly<T>, rp: &Poly<T>, w: f64) -> bool {
    let (val, scale) = if w.abs() <= 1.0 {
        let v = p.eval(T::from_f64(w)).to_f64();
        let s = p.eval(T::from_f64(w.abs())).to_f64();
        (v, s)
    } else {
        let z = 1.0 / w;
        let v = rp.eval(T::from_f64(z)).to_f64();
        let s = rp.eval(T::from_f64(z.abs())).to_f64();
        (v, s)
    };
    val.abs() <= RES_TOL * scale.abs().max(f64::MIN_POSITIVE)
}

fn derivative<T: Real>(p: &Poly<T>) -> Poly<T> {
    if p.coeffs.len() <= 1 {
        return Poly::constant(T::ZERO);
    }
    let coeffs = p
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c.mul(T::from_f64(k as f64)))
        .collect();
    Poly { coeffs }
}

/// Newton-polish a simple root using exact-coefficient evaluation in T.
fn polish<T: Real>(p: &Poly<T>, dp: &Poly<T>, w0: f64) -> f64 {
    let mut w = w0;
    for _ in 0..40 {
        let fw = p.eval(T::from_f64(w)).to_f64();
        let dw = dp.eval(T::from_f64(w)).to_f64();
        if dw == 0.0 {
            break;
        }
        let step = fw / dw;
        let next = w - step;
        if !next.is_finite() || (next - w).abs() <= 1e-16 * w.abs() {
            w = next;
            break;
        }
        w = next;
    }
    w
}

fn spectrum_from_chain<T: Real>(spec: &CircuitSpec, chain: &ScalarChain<T>) -> FfdResult<Spectrum> {
    let p = &chain.a;
    let p_prev = &chain.a_prev;
    let dp = derivative(p);
    let rp = reversed(p);
    let rp_dz = derivative(&rp);
    let coeffs = p.to_f64();
    if *coeffs.last().unwrap() == 0.0 {
        return Err(FfdError::SpectralStructure(
            "leading coefficient vanishes".into(),
        ));
    }
    let seeds = root_seeds(&coeffs)?;
    let polished: Vec<f64> = seeds
        .iter()
        .map(|&w0| {
            if w0.abs() <= 1.0 {
                polish(p, &dp, w0)
            } else {
                let z = polish(&rp, &rp_dz, 1.0 / w0);
                if z == 0.0 {
                    w0
                } else {
                    1.0 / z
                }
            }
        })
        .collect();
    for &w in &polished {
        if !w.is_finite() || !residual_ok(p, &rp, w) {
            return Err(FfdError::SpectralStructure(format!(
                "root near {w:e} did not converge"
            )));
        }
    }
    let mut ws =
        real_negative_separated(polished.into_iter().map(|w| C64::new(w, 0.0)).collect())?;
    // ascending u means descending |w|
    ws.reverse();

    let m = spec.m() as isize;
    let edge_factor = match spec.family() {
        Family::I => spec.x(m),
        Family::II => spec.x(m) * spec.x(m - 1),
        Family::III => spec.x(m - 2) * spec.x(m - 1) * spec.y(m),
    };

    let rprev = reversed(p_prev);
    let rdp = reversed(&dp);
    let mut u = Vec::with_capacity(ws.len());
    let mut epsilon = Vec::with_capacity(ws.len());
    let mut n_sq = Vec::with_capacity(ws.len());
    let mut norm = Vec::with_capacity(ws.len());
    let mut pvs = Vec::with_capacity(ws.len());
    for &w in &ws {
        let uk = (-w).sqrt();
        let (pv_m, pv_e) = eval_scaled(p_prev, &rprev, w);
        let (dv_m, dv_e) = eval_scaled(&dp, &rdp, w);
        let u2 = norm2(-w, 0);
        let pre = match spec.family() {
            Family::I | Family::II => norm2(16.0 * edge_factor * edge_factor * u2.0, u2.1),
            Family::III => {
                let u4 = norm2(u2.0 * u2.0, 2 * u2.1);
                norm2(16.0 * edge_factor * edge_factor * u4.0, u4.1)
            }
        };
        let t = norm2(pre.0 * pv_m, pre.1 + pv_e);
        let (nm, ne) = norm2(t.0 * dv_m, t.1 + dv_e);
        if !(nm > 0.0) {
            return Err(FfdError::SpectralStructure(format!(
                "mode normalization came out nonpositive ({nm:e} x 2^{ne}) at u = {uk:e}"
            )));
        }
        let (sm, se) = if ne % 2 == 0 { (nm, ne) } else { (2.0 * nm, ne - 1) };
        u.push(uk);
        epsilon.push((1.0 / uk).atan());
        n_sq.push(ldexp2(nm, ne));
        norm.push((sm.sqrt(), se / 2));
        pvs.push((pv_m, pv_e));
    }

    let (c0_sq, c) = if spec.family() == Family::III {
        let lead_ratio = p_prev.lead().to_f64() / p.lead().to_f64();
        let mut c0 = 1.0 - edge_factor * edge_factor * lead_ratio;
        if c0 < -1e-10 {
            return Err(FfdError::SpectralStructure(format!(
                "frozen-mode weight came out negative ({c0:e})"
            )));
        }
        c0 = c0.max(0.0);
        let cs = ws
            .iter()
            .zip(&pvs)
            .zip(&norm)
            .map(|((&w, &(pv_m, pv_e)), &(sm, se))| {
                let num = norm2(4.0 * (-w) * edge_factor * edge_factor * pv_m, pv_e);
                ldexp2(num.0 / sm, num.1 - se)
            })
            .collect();
        (Some(c0), Some(cs))
    } else {
        (None, None)
    };

    Ok(Spectrum {
        u,
        w: ws,
        epsilon,
        n_sq,
        norm,
        c0_sq,
        c,
    })
}

/// Mode data from the f64 scalar chain.
pub fn spectrum(spec: &CircuitSpec) -> FfdResult<Spectrum> {
    let chain = scalar_chain::<f64>(spec);
    spectrum_from_chain(spec, &chain)
}

/// Mode data with the polynomial chain carried in double-double precision.
pub fn spectrum_extended(spec: &CircuitSpec) -> FfdResult<Spectrum> {
    let chain = scalar_chain::<Dd>(spec);
    spectrum_from_chain(spec, &chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gate_pseudoenergy_is_the_angle() {
        let phi = 0.83;
        let spec = CircuitSpec::new(Family::I, 1, vec![phi]).unwrap();
        let s = spectrum(&spec).unwrap();
        assert_eq!(s.mode_count(), 1);
        assert!((s.u[0] - phi.cos() / phi.sin()).abs() < 1e-14);
        assert!((s.epsilon[0] - phi).abs() < 1e-14);
    }

    #[test]
    fn modes_are_clean_for_generic_angles() {
        for (family, m) in [
            (Family::I, 9),
            (Family::I, 10),
            (Family::II, 10),
            (Family::II, 12),
            (Family::III, 9),
            (Family::III, 12),
        ] {
            let spec = CircuitSpec::seeded(family, m, 21).unwrap();
            let s = spectrum(&spec).unwrap();
            assert_eq!(s.mode_count(), crate::poly::mode_count(m), "{family} M={m}");
            for k in 0..s.mode_count() {
                assert!(s.u[k] > 0.0);
                assert!(s.epsilon[k] > 0.0 && s.epsilon[k] < std::f64::consts::FRAC_PI_2);
                assert!(s.n_sq[k] > 0.0);
                if k > 0 {
                    assert!(s.u[k] > s.u[k - 1]);
                    assert!(s.epsilon[k] < s.epsilon[k - 1]);
                }
                let w = s.w[k];
                assert!((s.u[k] * s.u[k] + w).abs() < 1e-12 * w.abs());
            }
        }
    }

    #[test]
    fn polished_roots_annihilate_the_polynomial() {
        let spec = CircuitSpec::seeded(Family::III, 15, 2).unwrap();
        let chain = scalar_chain::<f64>(&spec);
        let s = spectrum(&spec).unwrap();
        for &w in &s.w {
            // relative to the size of the terms being summed at w
            let scale: f64 = chain
                .a
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| (c * w.powi(k as i32)).abs())
                .sum();
            assert!(chain.a.eval(w).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn extended_chain_matches_f64_at_moderate_size() {
        let spec = CircuitSpec::seeded(Family::III, 12, 31).unwrap();
        let a = spectrum(&spec).unwrap();
        let b = spectrum_extended(&spec).unwrap();
        for k in 0..a.mode_count() {
            assert!((a.u[k] - b.u[k]).abs() < 1e-11 * a.u[k]);
            assert!((a.n_sq[k] - b.n_sq[k]).abs() < 1e-9 * a.n_sq[k].abs());
        }
    }

    #[test]
    fn guards_reject_bad_root_sets() {
        let c = |re: f64, im: f64| C64::new(re, im);
        assert!(matches!(
            real_negative_separated(vec![c(-1.0, 0.5)]),
            Err(FfdError::SpectralStructure(_))
        ));
        assert!(matches!(
            real_negative_separated(vec![c(0.5, 0.0)]),
            Err(FfdError::SpectralStructure(_))
        ));
        assert!(matches!(
            real_negative_separated(vec![c(-1.0, 0.0), c(-1.0 - 1e-12, 0.0)]),
            Err(FfdError::Degeneracy(_))
        ));
        let ok = real_negative_separated(vec![c(-2.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(ok, vec![-2.0, -1.0]);
    }

    #[test]
    fn scaled_evaluation_matches_plain_inside_range() {
        let spec = CircuitSpec::seeded(Family::III, 12, 3).unwrap();
        let chain = scalar_chain::<f64>(&spec);
        let rp = reversed(&chain.a);
        for w in [-0.3, -1.0, -7.5, -41.0] {
            let plain = chain.a.eval(w);
            let (m, e) = eval_scaled(&chain.a, &rp, w);
            let got = ldexp2(m, e);
            assert!((got - plain).abs() <= 1e-13 * plain.abs(), "w={w}");
        }
        let (m, e) = pow_scaled(-3.0, 7);
        assert!((ldexp2(m, e) - (-3.0f64).powi(7)).abs() < 1e-9);
        let (m, e) = pow_scaled(-10.0, 400);
        let log10 = e as f64 * std::f64::consts::LOG10_2 + m.abs().log10();
        assert!((log10 - 400.0).abs() < 1e-10);
        assert!(m > 0.0);
        assert!(pow_scaled(-10.0, 401).0 < 0.0, "odd power keeps the sign");
    }

    #[test]
    fn band_edge_modes_of_long_homogeneous_chains_are_resolved() {
        // uniform angles pin one mode exponentially close to each band edge;
        // the root magnitudes then span dozens of decades
        let spec = CircuitSpec::homogeneous(Family::III, 150, 1.0).unwrap();
        let s = spectrum(&spec).unwrap();
        assert_eq!(s.mode_count(), 50);
        assert!(s.u[0] < 1e-15, "u_min = {:e}", s.u[0]);
        assert!(s.u[49] > 1e15, "u_max = {:e}", s.u[49]);
        assert!(s.epsilon[0] > std::f64::consts::FRAC_PI_2 - 1e-12);
        assert!(s.epsilon[49] < 1e-12);
        for &(nm, _) in &s.norm {
            assert!(nm > 0.0 && nm.is_finite());
        }
        // f64 chain coefficients limit the near-edge overlaps at this length;
        // the double-double chain restores them to machine accuracy
        let weights = |sp: &Spectrum| {
            sp.c0_sq.unwrap() + sp.c.as_ref().unwrap().iter().map(|ck| ck * ck).sum::<f64>()
        };
        assert!((weights(&s) - 1.0).abs() < 1e-5, "weight sum {}", weights(&s));
        let ext = spectrum_extended(&spec).unwrap();
        assert!((weights(&ext) - 1.0).abs() < 1e-12);
        for k in 0..s.mode_count() {
            assert!((s.u[k] - ext.u[k]).abs() <= 1e-4 * ext.u[k], "mode {k}");
        }
    }

    #[test]
    fn frozen_and_finite_weights_are_complete() {
        // the edge operator squares to one, so its mode weights must too
        for m in [3usize, 6, 9, 12] {
            let spec = CircuitSpec::seeded(Family::III, m, 71).unwrap();
            let s = spectrum(&spec).unwrap();
            let total = s.c0_sq.unwrap()
                + s.c.as_ref().unwrap().iter().map(|ck| ck * ck).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-12, "M={m}: {total}");
        }
    }

    #[test]
    fn frozen_mode_weight_for_smallest_three_sublattice_chain() {
        let spec = CircuitSpec::seeded(Family::III, 3, 5).unwrap();
        let s = spectrum(&spec).unwrap();
        let (x1, x2, y3) = (spec.x(1), spec.x(2), spec.y(3));
        let (y1, y2, x3) = (spec.y(1), spec.y(2), spec.x(3));
        let lead = x1 * x1 * x2 * x2 * y3 * y3 + y1 * y1 + x1 * x1 * y2 * y2;
        let want = 1.0 - (x1 * x2 * y3).powi(2) / lead;
        assert!((s.c0_sq.unwrap() - want).abs() < 1e-13);
        assert!(x3 > 0.0);
        let c = s.c.as_ref().unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].is_finite() && c[0] != 0.0);
    }
}
