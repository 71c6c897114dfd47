//! Circuit families and their generator algebra.
//!
//! All three families are built from the same generators
//! h_j = Z_{j-2} Z_{j-1} X_j (letters on nonpositive sites dropped), which
//! square to one, anticommute at distance one and two, and commute beyond.
//! A gate is g_j = cos(φ_j/2) + i sin(φ_j/2) h_j; one driving period is
//! V = G G^T with a family-specific ordering of the gates inside G.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FfdError, FfdResult};
use crate::pauli::{OperatorSum, PauliString, PauliWord};
use crate::C64;

/// Smallest |cos φ_j| accepted; the conserved charges and several spectral
/// normalizations divide by cos factors.
pub const X_MIN: f64 = 1e-9;

/// Range used when phases are drawn from a seed: keeps every cos φ and
/// sin φ safely away from zero so all downstream quantities are
/// well conditioned.
pub const SEEDED_PHASE_RANGE: (f64, f64) = (0.15, 1.35);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    I,
    II,
    III,
}

impl Family {
    pub fn parse(s: &str) -> FfdResult<Family> {
        match s {
            "I" | "i" | "1" => Ok(Family::I),
            "II" | "ii" | "2" => Ok(Family::II),
            "III" | "iii" | "3" => Ok(Family::III),
            _ => Err(FfdError::Argument(format!(
                "family must be I, II or III (got {s:?})"
            ))),
        }
    }

    /// Distance between consecutive chain steps (also the number of gate
    /// sublayers in one period).
    pub fn stride(&self) -> usize {
        match self {
            Family::I => 1,
            Family::II => 2,
            Family::III => 3,
        }
    }

    fn check_size(&self, m: usize) -> FfdResult<()> {
        let ok = match self {
            Family::I => m >= 1,
            Family::II => m >= 2 && m % 2 == 0,
            Family::III => m >= 3 && m % 3 == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(FfdError::Argument(format!(
                "family {self:?} needs M {} (got {m})",
                match self {
                    Family::I => ">= 1",
                    Family::II => "even and >= 2",
                    Family::III => "a positive multiple of 3",
                }
            )))
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A concrete circuit: family, number of sites M, and one angle per site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    family: Family,
    m: usize,
    phases: Vec<f64>,
}

impl CircuitSpec {
    pub fn new(family: Family, m: usize, phases: Vec<f64>) -> FfdResult<Self> {
        family.check_size(m)?;
        if phases.len() != m {
            return Err(FfdError::Argument(format!(
                "expected {m} phases, got {}",
                phases.len()
            )));
        }
        for (j, phi) in phases.iter().enumerate() {
            if !phi.is_finite() {
                return Err(FfdError::Argument(format!("phase {} is not finite", j + 1)));
            }
            if phi.cos().abs() < X_MIN {
                return Err(FfdError::Argument(format!(
                    "cos of phase {} is below {X_MIN:e}; gate {} is too close to singular",
                    j + 1,
                    j + 1
                )));
            }
        }
        Ok(CircuitSpec { family, m, phases })
    }

    pub fn homogeneous(family: Family, m: usize, phi: f64) -> FfdResult<Self> {
        Self::new(family, m, vec![phi; m])
    }

    /// Deterministic pseudo-random phases in `SEEDED_PHASE_RANGE`.
    pub fn seeded(family: Family, m: usize, seed: u64) -> FfdResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = SEEDED_PHASE_RANGE;
        let phases = (0..m).map(|_| rng.gen_range(lo..hi)).collect();
        Self::new(family, m, phases)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of sites M.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// cos φ_j, with the boundary convention x_j = 1 outside 1..=M.
    pub fn x(&self, j: isize) -> f64 {
        if j >= 1 && j <= self.m as isize {
            self.phases[(j - 1) as usize].cos()
        } else {
            1.0
        }
    }

    /// sin φ_j, with the boundary convention y_j = 0 outside 1..=M.
    pub fn y(&self, j: isize) -> f64 {
        if j >= 1 && j <= self.m as isize {
            self.phases[(j - 1) as usize].sin()
        } else {
            0.0
        }
    }

    /// Product of all cos φ_j; the value of the transfer operator at u = 0.
    pub fn x_product(&self) -> f64 {
        (1..=self.m as isize).map(|j| self.x(j)).product()
    }

    /// Generator h_j on a register of `n` sites (n ≥ j; letters that would
    /// sit on site 0 or -1 are dropped).
    pub fn generator(j: usize, n: usize) -> FfdResult<PauliString> {
        if j < 1 || j > n {
            return Err(FfdError::Argument(format!(
                "generator index {j} outside register 1..={n}"
            )));
        }
        let mut w = PauliWord::identity(n);
        if j >= 3 {
            w.set_letter(j - 2, false, true);
        }
        if j >= 2 {
            w.set_letter(j - 1, false, true);
        }
        w.set_letter(j, true, false);
        Ok(PauliString::from_word(w))
    }

    /// Edge operator whose quench dynamics the model solves: Z_M for
    /// families I and III, Z_{M-1} Z_M for family II.
    pub fn edge_operator(&self) -> PauliString {
        let mut w = PauliWord::identity(self.m);
        w.set_letter(self.m, false, true);
        if self.family == Family::II {
            w.set_letter(self.m - 1, false, true);
        }
        PauliString::from_word(w)
    }

    /// Gate g_j as a two-term operator sum on `n` sites.
    pub fn gate(&self, j: usize, n: usize) -> FfdResult<OperatorSum> {
        if j < 1 || j > self.m {
            return Err(FfdError::Argument(format!(
                "gate index {j} outside 1..={}",
                self.m
            )));
        }
        let half = self.phases[j - 1] / 2.0;
        let h = Self::generator(j, n)?;
        let mut g = OperatorSum::scalar(n, C64::new(half.cos(), 0.0));
        g.add_scaled(
            &OperatorSum::from_string(&h, C64::new(1.0, 0.0)),
            C64::new(0.0, half.sin()),
        );
        Ok(g)
    }

    /// Gate indices of G in product order (leftmost factor first).
    pub fn gate_order(&self) -> Vec<usize> {
        let m = self.m;
        match self.family {
            Family::I => (1..=m).collect(),
            Family::II => {
                let mut v: Vec<usize> = (2..=m).step_by(2).collect();
                v.extend((1..m).step_by(2));
                v
            }
            Family::III => {
                let mut v: Vec<usize> = (3..=m).step_by(3).collect();
                v.extend((2..m).step_by(3));
                v.extend((1..=m - 2).step_by(3));
                v
            }
        }
    }

    /// Gate indices of the full period V = G G^T in product order.  Each
    /// gate is symmetric, so G^T is G with the factor order reversed.
    pub fn floquet_order(&self) -> Vec<usize> {
        let mut v = self.gate_order();
        let mut rev: Vec<usize> = v.iter().rev().copied().collect();
        v.append(&mut rev);
        v
    }

    /// First gate index of every chain step (stride 1, 2 or 3).
    pub fn chain_steps(&self) -> Vec<usize> {
        (1..=self.m.saturating_sub(self.family.stride() - 1))
            .step_by(self.family.stride())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{anticommutator, commutator};

    #[test]
    fn generator_letters_at_the_boundary() {
        let h1 = CircuitSpec::generator(1, 4).unwrap();
        assert_eq!(h1.word.letter(1), (true, false));
        assert!(h1.word.support_max() == Some(1));
        let h2 = CircuitSpec::generator(2, 4).unwrap();
        assert_eq!(h2.word.letter(1), (false, true));
        assert_eq!(h2.word.letter(2), (true, false));
        let h4 = CircuitSpec::generator(4, 4).unwrap();
        assert_eq!(h4.word.letter(2), (false, true));
        assert_eq!(h4.word.letter(3), (false, true));
        assert_eq!(h4.word.letter(4), (true, false));
        assert!(CircuitSpec::generator(5, 4).is_err());
        assert!(CircuitSpec::generator(0, 4).is_err());
    }

    #[test]
    fn generator_algebra_is_exact() {
        let n = 9;
        for j in 1..=n {
            let hj = CircuitSpec::generator(j, n).unwrap();
            let sq = hj.mul(&hj);
            assert!(sq.word.is_identity() && sq.phase == 0, "h{j}^2 != 1");
            for l in 1..=n {
                let hl = CircuitSpec::generator(l, n).unwrap();
                let dist = j.abs_diff(l);
                if dist == 0 {
                    continue;
                }
                assert_eq!(
                    hj.commutes_with(&hl),
                    dist > 2,
                    "wrong (anti)commutation for h{j}, h{l}"
                );
            }
        }
    }

    #[test]
    fn gate_square_collapses_to_full_angle() {
        let spec = CircuitSpec::new(Family::I, 4, vec![0.3, 1.1, -0.4, 0.9]).unwrap();
        for j in 1..=4 {
            let g = spec.gate(j, 6).unwrap();
            let gg = g.mul(&g);
            let h = CircuitSpec::generator(j, 6).unwrap();
            let mut want = OperatorSum::scalar(6, C64::new(spec.x(j as isize), 0.0));
            want.add_scaled(
                &OperatorSum::from_string(&h, C64::new(1.0, 0.0)),
                C64::new(0.0, spec.y(j as isize)),
            );
            assert!(gg.sub(&want).coeff_norm() < 1e-15, "gate {j} square");
        }
    }

    #[test]
    fn gate_conjugation_preserves_neighbours() {
        let spec = CircuitSpec::new(Family::I, 6, vec![0.7; 6]).unwrap();
        let n = 8;
        let g3 = spec.gate(3, n).unwrap();
        for l in [1usize, 2, 4, 5] {
            let h = OperatorSum::from_string(
                &CircuitSpec::generator(l, n).unwrap(),
                C64::new(1.0, 0.0),
            );
            let conj = g3.mul(&h).mul(&g3);
            assert!(conj.sub(&h).coeff_norm() < 1e-15, "g3 h{l} g3 != h{l}");
        }
        // and the gate is unitary: g g† = 1
        let gg = g3.mul(&g3.dagger());
        assert!(gg.sub(&OperatorSum::identity(n)).coeff_norm() < 1e-15);
    }

    #[test]
    fn edge_operator_commutation_pattern() {
        for (family, m) in [(Family::I, 7), (Family::II, 8), (Family::III, 9)] {
            let spec = CircuitSpec::homogeneous(family, m, 0.8).unwrap();
            let chi = spec.edge_operator();
            for j in 1..=m {
                let hj = CircuitSpec::generator(j, m).unwrap();
                let anticommutes_wanted = match family {
                    Family::II => j >= m - 1,
                    _ => j == m,
                };
                assert_eq!(
                    chi.commutes_with(&hj),
                    !anticommutes_wanted,
                    "{family} M={m} h{j}"
                );
            }
        }
    }

    #[test]
    fn edge_operator_squares_to_one_via_sums() {
        let spec = CircuitSpec::homogeneous(Family::II, 6, 0.5).unwrap();
        let chi = OperatorSum::from_string(&spec.edge_operator(), C64::new(1.0, 0.0));
        assert!(chi.mul(&chi).sub(&OperatorSum::identity(6)).coeff_norm() < 1e-15);
        assert!(commutator(&chi, &chi).is_empty());
        let two = anticommutator(&chi, &chi)
            .sub(&OperatorSum::identity(6).scaled(C64::new(2.0, 0.0)));
        assert!(two.coeff_norm() < 1e-15);
    }

    #[test]
    fn size_validation_per_family() {
        assert!(CircuitSpec::homogeneous(Family::I, 1, 0.4).is_ok());
        assert!(CircuitSpec::homogeneous(Family::II, 5, 0.4).is_err());
        assert!(CircuitSpec::homogeneous(Family::II, 4, 0.4).is_ok());
        assert!(CircuitSpec::homogeneous(Family::III, 7, 0.4).is_err());
        assert!(CircuitSpec::homogeneous(Family::III, 9, 0.4).is_ok());
        assert!(CircuitSpec::new(Family::I, 3, vec![0.1, 0.2]).is_err());
        // cos φ = 0 rejected, and the message names the offending gate
        let err = CircuitSpec::new(Family::I, 2, vec![0.3, std::f64::consts::FRAC_PI_2])
            .unwrap_err();
        assert!(err.to_string().contains("2"));
    }

    #[test]
    fn gate_orders_interleave_as_layers() {
        let s2 = CircuitSpec::homogeneous(Family::II, 4, 0.3).unwrap();
        assert_eq!(s2.gate_order(), vec![2, 4, 1, 3]);
        let s3 = CircuitSpec::homogeneous(Family::III, 6, 0.3).unwrap();
        assert_eq!(s3.gate_order(), vec![3, 6, 2, 5, 1, 4]);
        let s1 = CircuitSpec::homogeneous(Family::I, 3, 0.3).unwrap();
        assert_eq!(s1.floquet_order(), vec![1, 2, 3, 3, 2, 1]);
        assert_eq!(s2.chain_steps(), vec![1, 3]);
        assert_eq!(s3.chain_steps(), vec![1, 4]);
    }

    #[test]
    fn seeded_phases_are_deterministic_and_bounded() {
        let a = CircuitSpec::seeded(Family::III, 9, 17).unwrap();
        let b = CircuitSpec::seeded(Family::III, 9, 17).unwrap();
        assert_eq!(a.phases(), b.phases());
        let c = CircuitSpec::seeded(Family::III, 9, 18).unwrap();
        assert_ne!(a.phases(), c.phases());
        for &p in a.phases() {
            assert!(p >= SEEDED_PHASE_RANGE.0 && p < SEEDED_PHASE_RANGE.1);
        }
    }
}
