//! Quench dynamics of the edge operator.
//!
//! In the mode decomposition χ = c_0 Ψ_0 + Σ_s c_s Ψ_s one driving period
//! multiplies the finite mode labelled ±k by the unit phase e^{±2iε_k} and
//! leaves the frozen part alone.  Over a product state the whole Heisenberg
//! series <χ(t)> therefore costs one O(M) chain contraction per mode up
//! front and O(S) arithmetic per time step, with no state vector anywhere.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::CircuitSpec;
use crate::error::{FfdError, FfdResult};
use crate::mpo::{mode_expectation, LocalizedChain};
use crate::pauli::{OperatorSum, ProductState};
use crate::spectral::{spectrum, spectrum_extended, Spectrum};
use crate::C64;

/// Edge-operator expectation values at integer driving periods.
#[derive(Debug, Clone, Serialize)]
pub struct TimeSeries {
    pub t: Vec<usize>,
    pub chi: Vec<f64>,
}

impl TimeSeries {
    /// Two-column text form, one row per period, full f64 precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.t.len() + 1));
        out.push_str("t,chi\n");
        for (t, chi) in self.t.iter().zip(&self.chi) {
            out.push_str(&format!("{t},{chi:.16e}\n"));
        }
        out
    }
}

/// Everything needed to evaluate <χ(t)> at any number of periods: the
/// spectrum, the frozen-mode offset, and one overlap per finite mode.
pub struct EdgeEvolution {
    pub spectrum: Spectrum,
    /// Time-invariant part c_0 <Ψ_0>, recovered as <χ(0)> minus the finite
    /// modes rather than through the frozen-mode operator itself.
    pub offset: f64,
    /// c_k <Ψ_k> for k = 1..=S; the -k branch contributes the conjugate.
    pub modes: Vec<C64>,
}

impl EdgeEvolution {
    pub fn prepare(spec: &CircuitSpec, state: &ProductState) -> FfdResult<Self> {
        Self::from_spectrum(spec, state, spectrum(spec)?)
    }

    /// Same pipeline with the polynomial chain accumulated in doubled
    /// precision; worthwhile once M reaches the low hundreds.
    pub fn prepare_extended(spec: &CircuitSpec, state: &ProductState) -> FfdResult<Self> {
        Self::from_spectrum(spec, state, spectrum_extended(spec)?)
    }

    fn from_spectrum(
        spec: &CircuitSpec,
        state: &ProductState,
        sp: Spectrum,
    ) -> FfdResult<Self> {
        if state.sites() != spec.m() {
            return Err(FfdError::Argument(format!(
                "state on {} sites does not match M = {}",
                state.sites(),
                spec.m()
            )));
        }
        let cs = sp.c.clone().ok_or_else(|| {
            FfdError::Argument(
                "edge dynamics needs the mode overlaps, available only for \
                 the three-sublattice family"
                    .into(),
            )
        })?;
        let chain = LocalizedChain::build(spec)?;
        let chi0 = state.expect(&OperatorSum::from_string(
            &spec.edge_operator(),
            C64::new(1.0, 0.0),
        ));
        if chi0.im.abs() > 1e-10 {
            return Err(FfdError::Consistency(format!(
                "edge expectation has imaginary part {:e}",
                chi0.im
            )));
        }
        let modes = (1..=sp.mode_count() as i32)
            .into_par_iter()
            .map(|k| {
                mode_expectation(spec, &chain, &sp, k, state)
                    .map(|v| v * cs[k as usize - 1])
            })
            .collect::<FfdResult<Vec<C64>>>()?;
        let finite: f64 = modes.iter().map(|v| 2.0 * v.re).sum();
        Ok(EdgeEvolution {
            offset: chi0.re - finite,
            spectrum: sp,
            modes,
        })
    }

    /// <χ(t)> after t whole periods.
    pub fn value(&self, t: usize) -> f64 {
        let mut acc = self.offset;
        for (v, &eps) in self.modes.iter().zip(&self.spectrum.epsilon) {
            let phase = C64::from_polar(1.0, 2.0 * eps * t as f64);
            acc += 2.0 * (v * phase).re;
        }
        acc
    }

    pub fn series(&self, t_max: usize) -> TimeSeries {
        let t: Vec<usize> = (0..=t_max).collect();
        let chi = t.iter().map(|&t| self.value(t)).collect();
        TimeSeries { t, chi }
    }
}

/// Convenience wrapper: prepare and evaluate 0..=t_max in one call.
pub fn evolve_chi(
    spec: &CircuitSpec,
    state: &ProductState,
    t_max: usize,
) -> FfdResult<TimeSeries> {
    Ok(EdgeEvolution::prepare(spec, state)?.series(t_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Family;
    use crate::oracle;

    #[test]
    fn mode_series_matches_dense_evolution() {
        for (m, seed) in [(3usize, 2u64), (6, 5), (9, 8)] {
            let spec = CircuitSpec::seeded(Family::III, m, seed).unwrap();
            let state = ProductState::uniform_theta(m, 0.4);
            let got = evolve_chi(&spec, &state, 24).unwrap();
            let want = oracle::quench_reference(&spec, &state, 24).unwrap();
            let worst = got
                .chi
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-10, "M={m}: worst deviation {worst:e}");
        }
    }

    #[test]
    fn offset_equals_the_frozen_mode_expectation() {
        let spec = CircuitSpec::seeded(Family::III, 6, 13).unwrap();
        let state = ProductState::uniform_theta(6, 0.55);
        let ev = EdgeEvolution::prepare(&spec, &state).unwrap();
        let sp = &ev.spectrum;
        let frozen = oracle::zero_mode(&spec, sp).unwrap();
        let want = sp.c0_sq.unwrap().sqrt() * state.expect(&frozen).re;
        assert!((ev.offset - want).abs() < 1e-10, "{} vs {want}", ev.offset);
    }

    #[test]
    fn series_stays_within_the_operator_norm() {
        let spec = CircuitSpec::seeded(Family::III, 12, 21).unwrap();
        let state = ProductState::uniform_theta(12, 0.7);
        let series = evolve_chi(&spec, &state, 200).unwrap();
        for (&t, &v) in series.t.iter().zip(&series.chi) {
            assert!(v.abs() <= 1.0 + 1e-8, "t={t}: {v}");
        }
        assert_eq!(series.t.len(), 201);
    }

    #[test]
    fn other_families_are_rejected() {
        for (family, m) in [(Family::I, 6), (Family::II, 6)] {
            let spec = CircuitSpec::seeded(family, m, 1).unwrap();
            let state = ProductState::uniform_theta(m, 0.3);
            let err = evolve_chi(&spec, &state, 4).unwrap_err();
            assert!(matches!(err, FfdError::Argument(_)), "{family}");
        }
        let spec = CircuitSpec::seeded(Family::III, 6, 1).unwrap();
        let short = ProductState::uniform_theta(5, 0.3);
        assert!(evolve_chi(&spec, &short, 4).is_err());
    }

    #[test]
    fn csv_rows_are_stable_and_complete() {
        let spec = CircuitSpec::seeded(Family::III, 3, 4).unwrap();
        let state = ProductState::uniform_theta(3, 0.2);
        let a = evolve_chi(&spec, &state, 5).unwrap().to_csv();
        let b = evolve_chi(&spec, &state, 5).unwrap().to_csv();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "t,chi");
        assert!(lines[1].starts_with("0,"));
        let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - state.expect(&OperatorSum::from_string(
            &spec.edge_operator(),
            C64::new(1.0, 0.0),
        ))
        .re)
            .abs()
            < 1e-14);
    }
}
