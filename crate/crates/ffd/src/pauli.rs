//! Exact Pauli-string algebra on a fixed register of sites.
//!
//! A Pauli word is stored as two bit vectors: `x` bits select X letters and
//! `z` bits select Z letters, so a site with both bits set carries the
//! product letter XZ (= -iY).  An attached phase lives in the exact group
//! {1, i, -1, -i}, represented as the exponent of i, so products of words
//! never touch floating point.  Operator sums attach complex amplitudes to
//! phase-free words; all sign and i bookkeeping folds into the amplitudes.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{FfdError, FfdResult};
use crate::C64;

/// Amplitudes with magnitude below this are dropped after sum arithmetic.
pub const PRUNE_TOL: f64 = 1e-14;

const LIMB: usize = 64;

fn limbs(n: usize) -> usize {
    n.div_ceil(LIMB)
}

fn parity_and(a: &[u64], b: &[u64]) -> u32 {
    let mut acc = 0u64;
    for (&ai, &bi) in a.iter().zip(b) {
        acc ^= ai & bi;
    }
    (acc.count_ones() & 1) as u32
}

/// Phase-free Pauli word on `n` sites.  Site labels are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliWord {
    pub fn identity(n: usize) -> Self {
        PauliWord {
            n,
            x: vec![0; limbs(n)],
            z: vec![0; limbs(n)],
        }
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    fn check_site(&self, site: usize) {
        assert!(
            site >= 1 && site <= self.n,
            "site {site} outside register 1..={}",
            self.n
        );
    }

    /// (x bit, z bit) of the letter at `site`.
    pub fn letter(&self, site: usize) -> (bool, bool) {
        self.check_site(site);
        let (w, b) = ((site - 1) / LIMB, (site - 1) % LIMB);
        (self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    /// Overwrite the letter at `site`.
    pub fn set_letter(&mut self, site: usize, x: bool, z: bool) {
        self.check_site(site);
        let (w, b) = ((site - 1) / LIMB, (site - 1) % LIMB);
        self.x[w] = self.x[w] & !(1 << b) | (u64::from(x) << b);
        self.z[w] = self.z[w] & !(1 << b) | (u64::from(z) << b);
    }

    /// Largest site carrying a non-identity letter.
    pub fn support_max(&self) -> Option<usize> {
        for w in (0..self.x.len()).rev() {
            let occ = self.x[w] | self.z[w];
            if occ != 0 {
                return Some(w * LIMB + (63 - occ.leading_zeros() as usize) + 1);
            }
        }
        None
    }

    /// True iff the two words commute (symplectic form vanishes).
    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        assert_eq!(self.n, other.n, "register size mismatch");
        parity_and(&self.x, &other.z) == parity_and(&self.z, &other.x)
    }

    /// Number of sites whose letter is XZ, mod 2.
    fn xz_overlap_parity(&self) -> u32 {
        parity_and(&self.x, &self.z)
    }

    /// Same word viewed on a larger register.
    pub fn padded(&self, n: usize) -> PauliWord {
        assert!(n >= self.n);
        let mut w = PauliWord::identity(n);
        w.x[..self.x.len()].copy_from_slice(&self.x);
        w.z[..self.z.len()].copy_from_slice(&self.z);
        w
    }

    /// Same word on a smaller register; fails if support extends past `n`.
    pub fn restricted(&self, n: usize) -> FfdResult<PauliWord> {
        if self.support_max().unwrap_or(0) > n {
            return Err(FfdError::Argument(format!(
                "word supported beyond site {n} cannot be restricted"
            )));
        }
        let mut w = PauliWord::identity(n);
        let l = limbs(n);
        w.x.copy_from_slice(&self.x[..l]);
        w.z.copy_from_slice(&self.z[..l]);
        // clear bits above n in the top limb
        if n % LIMB != 0 {
            let mask = (1u64 << (n % LIMB)) - 1;
            w.x[l - 1] &= mask;
            w.z[l - 1] &= mask;
        }
        Ok(w)
    }
}

/// Pauli word with an exact phase i^k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    pub word: PauliWord,
    /// Exponent of i, reduced mod 4.
    pub phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            word: PauliWord::identity(n),
            phase: 0,
        }
    }

    pub fn from_word(word: PauliWord) -> Self {
        PauliString { word, phase: 0 }
    }

    /// Single letter at `site`: x/z select the X and Z bits.
    pub fn letter(n: usize, site: usize, x: bool, z: bool) -> Self {
        let mut w = PauliWord::identity(n);
        w.set_letter(site, x, z);
        PauliString { word: w, phase: 0 }
    }

    /// Y at `site`, i.e. i·XZ.
    pub fn y(n: usize, site: usize) -> Self {
        let mut s = Self::letter(n, site, true, true);
        s.phase = 1;
        s
    }

    pub fn phase_factor(&self) -> C64 {
        match self.phase & 3 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Exact product; phases stay in {1, i, -1, -i}.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(
            self.word.n, other.word.n,
            "register size mismatch in product"
        );
        let swap = parity_and(&self.word.z, &other.word.x);
        let mut x = self.word.x.clone();
        let mut z = self.word.z.clone();
        for i in 0..x.len() {
            x[i] ^= other.word.x[i];
            z[i] ^= other.word.z[i];
        }
        PauliString {
            word: PauliWord { n: self.word.n, x, z },
            phase: (self.phase + other.phase + 2 * swap as u8) & 3,
        }
    }

    /// Hermitian conjugate.
    pub fn dagger(&self) -> PauliString {
        let flips = self.word.xz_overlap_parity() as u8;
        PauliString {
            word: self.word.clone(),
            phase: (4 - self.phase + 2 * flips) & 3,
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.word.commutes_with(&other.word)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Render XZ sites as Y, folding the -i per Y into the shown phase.
        let mut ys = 0u8;
        let mut body = String::new();
        for site in 1..=self.word.n {
            let (x, z) = self.word.letter(site);
            let letter = match (x, z) {
                (false, false) => continue,
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => {
                    ys += 1;
                    'Y'
                }
            };
            body.push_str(&format!("{letter}{site} "));
        }
        let shown = (self.phase + 4 - (ys & 3)) & 3;
        let sign = ["+1", "+i", "-1", "-i"][shown as usize];
        if body.is_empty() {
            write!(f, "({sign})·I")
        } else {
            write!(f, "({sign})·{}", body.trim_end())
        }
    }
}

/// Complex linear combination of Pauli words.
///
/// Keys are phase-free words; the map is ordered so iteration (and therefore
/// floating-point summation order) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    n: usize,
    terms: BTreeMap<PauliWord, C64>,
}

impl OperatorSum {
    pub fn zero(n: usize) -> Self {
        OperatorSum {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut s = Self::zero(n);
        s.terms.insert(PauliWord::identity(n), C64::new(1.0, 0.0));
        s
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        let mut s = Self::zero(n);
        s.add_word(PauliWord::identity(n), c);
        s
    }

    pub fn from_string(ps: &PauliString, amp: C64) -> Self {
        let mut s = Self::zero(ps.word.sites());
        s.add_word(ps.word.clone(), amp * ps.phase_factor());
        s
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &PauliWord) -> C64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    /// Add `amp`·word, merging with any existing term.
    pub fn add_word(&mut self, word: PauliWord, amp: C64) {
        assert_eq!(word.sites(), self.n, "register size mismatch");
        *self.terms.entry(word).or_insert_with(C64::default) += amp;
    }

    pub fn add_scaled(&mut self, other: &OperatorSum, c: C64) {
        assert_eq!(self.n, other.n, "register size mismatch");
        for (w, a) in &other.terms {
            let entry = self.terms.entry(w.clone()).or_insert_with(C64::default);
            *entry += c * a;
        }
        self.prune();
    }

    pub fn add(&self, other: &OperatorSum) -> OperatorSum {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(1.0, 0.0));
        out
    }

    pub fn sub(&self, other: &OperatorSum) -> OperatorSum {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(-1.0, 0.0));
        out
    }

    pub fn scaled(&self, c: C64) -> OperatorSum {
        let mut out = Self::zero(self.n);
        for (w, a) in &self.terms {
            out.terms.insert(w.clone(), c * a);
        }
        out.prune();
        out
    }

    /// Operator product, distributing over all term pairs.
    pub fn mul(&self, other: &OperatorSum) -> OperatorSum {
        assert_eq!(self.n, other.n, "register size mismatch");
        let mut out = Self::zero(self.n);
        for (wa, ca) in &self.terms {
            let pa = PauliString::from_word(wa.clone());
            for (wb, cb) in &other.terms {
                let prod = pa.mul(&PauliString::from_word(wb.clone()));
                let amp = ca * cb * prod.phase_factor();
                let entry = out
                    .terms
                    .entry(prod.word)
                    .or_insert_with(C64::default);
                *entry += amp;
            }
        }
        out.prune();
        out
    }

    /// Multiply on the right by a single Pauli string.
    pub fn mul_string(&self, ps: &PauliString, amp: C64) -> OperatorSum {
        let mut out = Self::zero(self.n);
        for (wa, ca) in &self.terms {
            let prod = PauliString::from_word(wa.clone()).mul(ps);
            let c = ca * amp * prod.phase_factor();
            let entry = out.terms.entry(prod.word).or_insert_with(C64::default);
            *entry += c;
        }
        out.prune();
        out
    }

    pub fn dagger(&self) -> OperatorSum {
        let mut out = Self::zero(self.n);
        for (w, a) in &self.terms {
            let d = PauliString::from_word(w.clone()).dagger();
            let f = d.phase_factor();
            out.terms.insert(d.word, a.conj() * f);
        }
        out
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_TOL);
    }

    /// l2 norm of the coefficient vector; equals ‖O‖_F / 2^(n/2) because
    /// distinct Pauli words are orthogonal under the trace inner product.
    pub fn coeff_norm(&self) -> f64 {
        let s: f64 = self.terms.values().map(|a| a.norm_sqr()).sum();
        // an empty sum yields -0.0, which sqrt would keep
        if s == 0.0 {
            0.0
        } else {
            s.sqrt()
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest site carrying a non-identity letter in any term.
    pub fn support_max(&self) -> usize {
        self.terms
            .keys()
            .filter_map(|w| w.support_max())
            .max()
            .unwrap_or(0)
    }

    pub fn padded(&self, n: usize) -> OperatorSum {
        let mut out = Self::zero(n);
        for (w, a) in &self.terms {
            out.terms.insert(w.padded(n), *a);
        }
        out
    }

    pub fn restricted(&self, n: usize) -> FfdResult<OperatorSum> {
        let mut out = Self::zero(n);
        for (w, a) in &self.terms {
            out.terms.insert(w.restricted(n)?, *a);
        }
        Ok(out)
    }
}

pub fn commutator(a: &OperatorSum, b: &OperatorSum) -> OperatorSum {
    a.mul(b).sub(&b.mul(a))
}

pub fn anticommutator(a: &OperatorSum, b: &OperatorSum) -> OperatorSum {
    a.mul(b).add(&b.mul(a))
}

/// 2x2 matrix of the letter X^x Z^z, row-major.
pub fn letter_matrix(x: bool, z: bool) -> [[C64; 2]; 2] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    match (x, z) {
        (false, false) => [[l, o], [o, l]],
        (true, false) => [[o, l], [l, o]],
        (false, true) => [[l, o], [o, -l]],
        (true, true) => [[o, -l], [l, o]],
    }
}

/// Unentangled state ⊗_j (a_j|0> + b_j|1>), used both as the quench initial
/// state and as a cheap expectation-value functional for operator sums.
#[derive(Debug, Clone)]
pub struct ProductState {
    amps: Vec<(C64, C64)>,
}

impl ProductState {
    /// Every site in cos(θ)|0> + sin(θ)|1>.
    pub fn uniform_theta(n: usize, theta: f64) -> Self {
        let a = C64::new(theta.cos(), 0.0);
        let b = C64::new(theta.sin(), 0.0);
        ProductState {
            amps: vec![(a, b); n],
        }
    }

    pub fn from_site_amplitudes(amps: Vec<(C64, C64)>) -> FfdResult<Self> {
        for (j, (a, b)) in amps.iter().enumerate() {
            let norm = a.norm_sqr() + b.norm_sqr();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(FfdError::Argument(format!(
                    "site {} amplitudes have norm {} (want 1)",
                    j + 1,
                    norm
                )));
            }
        }
        Ok(ProductState { amps })
    }

    pub fn sites(&self) -> usize {
        self.amps.len()
    }

    pub fn site(&self, site: usize) -> (C64, C64) {
        self.amps[site - 1]
    }

    /// <ψ|L|ψ> for a single letter at one site.
    fn site_expect(&self, site: usize, x: bool, z: bool) -> C64 {
        let (a, b) = self.amps[site - 1];
        match (x, z) {
            (false, false) => C64::new(1.0, 0.0),
            (true, false) => a.conj() * b + b.conj() * a,
            (false, true) => C64::new(a.norm_sqr() - b.norm_sqr(), 0.0),
            (true, true) => b.conj() * a - a.conj() * b,
        }
    }

    /// <ψ|O|ψ>: factorizes over sites because the state is a product.
    pub fn expect(&self, op: &OperatorSum) -> C64 {
        assert_eq!(op.sites(), self.sites(), "register size mismatch");
        let mut total = C64::default();
        for (w, amp) in op.terms() {
            let mut factor = *amp;
            for site in 1..=self.sites() {
                let (x, z) = w.letter(site);
                if x || z {
                    factor *= self.site_expect(site, x, z);
                }
            }
            total += factor;
        }
        total
    }

    /// Dense 2^n state vector; site 1 is the least significant bit.
    pub fn to_vector(&self) -> Vec<C64> {
        let n = self.sites();
        let mut v = vec![C64::default(); 1 << n];
        v[0] = C64::new(1.0, 0.0);
        let mut filled = 1usize;
        for (a, b) in self.amps.iter() {
            for idx in 0..filled {
                let lo = v[idx];
                v[idx] = lo * a;
                v[idx + filled] = lo * b;
            }
            filled <<= 1;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Dense 2x2 of a single-site Pauli string, the independent check for
    /// the phase bookkeeping.
    fn dense1(ps: &PauliString) -> [[C64; 2]; 2] {
        assert_eq!(ps.word.sites(), 1);
        let (x, z) = ps.word.letter(1);
        let m = letter_matrix(x, z);
        let p = ps.phase_factor();
        [[m[0][0] * p, m[0][1] * p], [m[1][0] * p, m[1][1] * p]]
    }

    fn mat_mul(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let mut out = [[C64::default(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn mat_close(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).norm() < 1e-15))
    }

    #[test]
    fn single_site_products_match_dense_matrices() {
        // all 16 letter pairs at all 16 phase pairs
        for (x1, z1) in [(false, false), (true, false), (false, true), (true, true)] {
            for (x2, z2) in [(false, false), (true, false), (false, true), (true, true)] {
                for p1 in 0..4u8 {
                    for p2 in 0..4u8 {
                        let mut a = PauliString::letter(1, 1, x1, z1);
                        a.phase = p1;
                        let mut b = PauliString::letter(1, 1, x2, z2);
                        b.phase = p2;
                        let prod = a.mul(&b);
                        assert!(
                            mat_close(dense1(&prod), mat_mul(dense1(&a), dense1(&b))),
                            "{a} * {b} gave {prod}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn y_letter_is_standard_y() {
        let y = PauliString::y(1, 1);
        let want = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        assert!(mat_close(dense1(&y), want));
        // Y^2 = 1
        let sq = y.mul(&y);
        assert!(sq.word.is_identity() && sq.phase == 0);
    }

    #[test]
    fn dagger_matches_dense_conjugate_transpose() {
        for (x, z) in [(false, false), (true, false), (false, true), (true, true)] {
            for p in 0..4u8 {
                let mut s = PauliString::letter(1, 1, x, z);
                s.phase = p;
                let d = dense1(&s);
                let dt = [[d[0][0].conj(), d[1][0].conj()], [d[0][1].conj(), d[1][1].conj()]];
                assert!(mat_close(dense1(&s.dagger()), dt), "{s}");
            }
        }
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(move |(letters, phase)| {
            let mut w = PauliWord::identity(n);
            for (i, l) in letters.iter().enumerate() {
                w.set_letter(i + 1, l & 1 == 1, l & 2 == 2);
            }
            PauliString { word: w, phase }
        })
    }

    proptest! {
        #[test]
        fn product_is_associative(a in arb_string(7), b in arb_string(7), c in arb_string(7)) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn commute_predicate_matches_products(a in arb_string(6), b in arb_string(6)) {
            let ab = a.mul(&b);
            let ba = b.mul(&a);
            prop_assert_eq!(ab.word, ba.word.clone());
            if a.commutes_with(&b) {
                prop_assert_eq!(ab.phase, ba.phase);
            } else {
                prop_assert_eq!(ab.phase, (ba.phase + 2) & 3);
            }
        }

        #[test]
        fn dagger_is_involutive(a in arb_string(5)) {
            prop_assert_eq!(a.dagger().dagger(), a);
        }

        #[test]
        fn squares_are_plus_or_minus_one(a in arb_string(6)) {
            // every Pauli string with phase in {1,-1,i,-i} squares to ±1
            let sq = a.mul(&a);
            prop_assert!(sq.word.is_identity());
            prop_assert!(sq.phase == 0 || sq.phase == 2);
        }
    }

    /// Dense matrix of an operator sum on few sites, built from letter
    /// matrices alone (no PauliString products) — test-local oracle.
    fn dense_sum(op: &OperatorSum) -> Vec<Vec<C64>> {
        let n = op.sites();
        let dim = 1 << n;
        let mut m = vec![vec![C64::default(); dim]; dim];
        for (w, amp) in op.terms() {
            for col in 0..dim {
                let mut val = *amp;
                let mut row = 0usize;
                for site in 1..=n {
                    let (x, z) = w.letter(site);
                    let bit = (col >> (site - 1)) & 1;
                    let lm = letter_matrix(x, z);
                    let outbit = if x { bit ^ 1 } else { bit };
                    val *= lm[outbit][bit];
                    row |= outbit << (site - 1);
                }
                m[row][col] += val;
            }
        }
        m
    }

    #[test]
    fn sum_product_matches_dense() {
        // fixed small operators on 3 sites with random-ish amplitudes
        let n = 3;
        let mut a = OperatorSum::zero(n);
        a.add_word(PauliWord::identity(n), c(0.3, -0.1));
        let mut w1 = PauliWord::identity(n);
        w1.set_letter(1, true, false);
        w1.set_letter(3, false, true);
        a.add_word(w1, c(-0.7, 0.2));
        let mut b = OperatorSum::zero(n);
        let mut w2 = PauliWord::identity(n);
        w2.set_letter(1, true, true);
        w2.set_letter(2, true, false);
        b.add_word(w2.clone(), c(0.5, 0.4));
        let mut w3 = PauliWord::identity(n);
        w3.set_letter(3, true, false);
        b.add_word(w3, c(0.0, 1.0));

        let prod = a.mul(&b);
        let da = dense_sum(&a);
        let db = dense_sum(&b);
        let dp = dense_sum(&prod);
        let dim = 1 << n;
        for i in 0..dim {
            for j in 0..dim {
                let mut want = C64::default();
                for k in 0..dim {
                    want += da[i][k] * db[k][j];
                }
                assert!((dp[i][j] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn prune_drops_cancelled_terms() {
        let n = 2;
        let s = PauliString::letter(n, 1, true, false);
        let a = OperatorSum::from_string(&s, c(1.0, 0.0));
        let diff = a.sub(&a);
        assert!(diff.is_empty());
    }

    #[test]
    fn uniform_theta_edge_expectation() {
        // <Z> per site is cos^2 θ − sin^2 θ = cos 2θ; at θ = π/8 this is √2/2
        let st = ProductState::uniform_theta(4, std::f64::consts::FRAC_PI_8);
        let z4 = OperatorSum::from_string(&PauliString::letter(4, 4, false, true), c(1.0, 0.0));
        let got = st.expect(&z4);
        assert!((got.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(got.im.abs() < 1e-15);
    }

    #[test]
    fn product_state_vector_agrees_with_expect() {
        let n = 3;
        let amps = vec![
            (c(0.6, 0.0), c(0.8, 0.0)),
            (c(0.36, 0.48), c(0.0, 0.8)),
            (c(1.0 / 3.0, 2.0 / 3.0), c(-2.0 / 3.0, 0.0)),
        ];
        let st = ProductState::from_site_amplitudes(amps).unwrap();
        let mut op = OperatorSum::zero(n);
        let mut w = PauliWord::identity(n);
        w.set_letter(1, true, false);
        w.set_letter(2, true, true);
        op.add_word(w, c(0.3, -0.9));
        let mut w = PauliWord::identity(n);
        w.set_letter(2, false, true);
        w.set_letter(3, true, false);
        op.add_word(w, c(-1.1, 0.25));

        let v = st.to_vector();
        let m = dense_sum(&op);
        let dim = 1 << n;
        let mut want = C64::default();
        for i in 0..dim {
            for j in 0..dim {
                want += v[i].conj() * m[i][j] * v[j];
            }
        }
        let got = st.expect(&op);
        assert!((got - want).norm() < 1e-14, "got {got}, want {want}");
    }

    #[test]
    fn unnormalized_site_rejected() {
        let amps = vec![(c(1.0, 0.0), c(0.1, 0.0))];
        assert!(ProductState::from_site_amplitudes(amps).is_err());
    }
}
