//! Site-localized matrix product form of the transfer operator.
//!
//! The recursions in `transfer` advance in steps of one, two or three gates
//! and append generators whose letters trail over up to five consecutive
//! sites.  Expanding the result as an operator sum costs exponentially many
//! terms, but the recursion itself has a tiny bond space: three slots for
//! the staircase family, four for the others.  This module replays one
//! chain step at a time, pushes every generator letter down to the site it
//! acts on (collecting the sign whenever two letters meet on a site), and
//! records per-site transition tables between bond states.  The build is
//! symbolic in the spectral parameter u, so a single build serves every
//! mode; `sandwich` then contracts <ψ| A(u1) · mid · A(u2) |ψ> over a
//! product state in O(M) arithmetic per parameter pair.

use std::collections::BTreeMap;

use crate::circuit::{CircuitSpec, Family};
use crate::error::{FfdError, FfdResult};
use crate::pauli::{letter_matrix, OperatorSum, PauliString, PauliWord, ProductState};
use crate::spectral::{ldexp2, Spectrum};
use crate::C64;

/// Hard cap on bond states at any cut; the reachable set is bounded by the
/// slot count times the pending-letter patterns and stays far below this.
const MAX_CUT_STATES: usize = 4096;

/// Bond state between two sites: recursion slot plus the letters already
/// committed to the next five sites (bit 0 = X, bit 1 = Z).
type Key = (u8, [u8; 5]);

/// One matrix element of a chain step: coefficient, power of u, and the
/// generator indices it appends, leftmost factor first.
#[derive(Clone)]
struct Term {
    coeff: C64,
    upow: u8,
    gens: Vec<usize>,
}

fn term(re: f64, im: f64, upow: u8, gens: &[usize]) -> Term {
    Term {
        coeff: C64::new(re, im),
        upow,
        gens: gens.to_vec(),
    }
}

/// Entry-wise product of two term lists, left factors first.
fn entry_mul(a: &[Term], b: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ta in a {
        for tb in b {
            let mut gens = ta.gens.clone();
            gens.extend_from_slice(&tb.gens);
            out.push(Term {
                coeff: ta.coeff * tb.coeff,
                upow: ta.upow + tb.upow,
                gens,
            });
        }
    }
    out
}

/// The step matrix at chain step m, as slot-to-slot term lists.  Row is the
/// incoming slot, column the outgoing one; slot 0 carries the operator the
/// chain finally returns, the others carry the delayed partners of the
/// recursion with their trailing generators stripped (the following steps
/// reinsert them, which is what keeps every letter within the window).
fn step_entries(spec: &CircuitSpec, m: usize) -> Vec<Vec<Vec<Term>>> {
    let (x0, y0) = (spec.x(m as isize), spec.y(m as isize));
    let (x1, y1) = (spec.x(m as isize + 1), spec.y(m as isize + 1));
    let (x2, y2) = (spec.x(m as isize + 2), spec.y(m as isize + 2));
    match spec.family() {
        Family::I => {
            let mut e: Vec<Vec<Vec<Term>>> = vec![vec![Vec::new(); 3]; 3];
            e[0][0] = vec![term(x0, 0.0, 0, &[])];
            e[0][2] = vec![term(1.0, 0.0, 0, &[])];
            e[1][0] = vec![term(0.0, y0, 1, &[m])];
            e[2][1] = vec![term(1.0, 0.0, 0, &[])];
            e
        }
        Family::II | Family::III => {
            // shared diagonal factor carrying this step's own generators
            let theta = [
                vec![term(1.0, 0.0, 0, &[])],
                vec![term(0.0, y0, 0, &[m])],
                vec![term(0.0, y1, 0, &[m + 1])],
                vec![term(y0 * y1, 0.0, 0, &[m, m + 1])],
            ];
            let inner: Vec<Vec<Vec<Term>>> = if spec.family() == Family::II {
                vec![
                    vec![
                        vec![term(x0 * x1, 0.0, 0, &[])],
                        vec![term(1.0, 0.0, 0, &[])],
                        vec![term(x0, 0.0, 0, &[])],
                        vec![term(x1, 0.0, 0, &[])],
                    ],
                    vec![
                        vec![term(1.0, 0.0, 1, &[])],
                        Vec::new(),
                        vec![term(x1, 0.0, 1, &[])],
                        Vec::new(),
                    ],
                    vec![
                        vec![term(x0, 0.0, 1, &[])],
                        Vec::new(),
                        Vec::new(),
                        vec![term(1.0, 0.0, 1, &[])],
                    ],
                    vec![
                        Vec::new(),
                        Vec::new(),
                        vec![term(1.0, 0.0, 0, &[])],
                        Vec::new(),
                    ],
                ]
            } else {
                // the third gate of the step enters through these two-term
                // factors, multiplied from the right
                let kp = |scale: f64| {
                    vec![
                        term(scale * x2, 0.0, 0, &[]),
                        term(0.0, scale * y2, 1, &[m + 2]),
                    ]
                };
                let km = |scale: f64| {
                    vec![
                        term(scale * x2, 0.0, 1, &[]),
                        term(0.0, -scale * y2, 0, &[m + 2]),
                    ]
                };
                vec![
                    vec![
                        kp(x0 * x1),
                        vec![term(x0, 0.0, 0, &[])],
                        vec![term(x0 * x1, 0.0, 0, &[])],
                        kp(x0),
                    ],
                    vec![
                        vec![term(1.0, 0.0, 1, &[])],
                        km(x1),
                        km(1.0),
                        vec![term(x1, 0.0, 1, &[])],
                    ],
                    vec![
                        vec![term(x0, 0.0, 1, &[])],
                        Vec::new(),
                        km(x0),
                        Vec::new(),
                    ],
                    vec![
                        Vec::new(),
                        vec![term(1.0, 0.0, 0, &[])],
                        Vec::new(),
                        kp(1.0),
                    ],
                ]
            };
            (0..4)
                .map(|i| (0..4).map(|j| entry_mul(&theta[i], &inner[i][j])).collect())
                .collect()
        }
    }
}

/// Fold the letters of h_g into the pending window relative to site `s`,
/// returning the sign picked up when letters meet on a site (earlier
/// factors stay on the left).
fn merge_generator(pend: &mut [u8; 5], g: usize, s: usize) -> f64 {
    let mut sign = 1.0;
    let letters = [(g as isize - 2, 2u8), (g as isize - 1, 2u8), (g as isize, 1u8)];
    for (t, l) in letters {
        if t < 1 {
            continue;
        }
        let rel = (t - s as isize) as usize;
        debug_assert!(rel < 5, "letter outside the pending window");
        let old = pend[rel];
        if old & 2 != 0 && l & 1 != 0 {
            sign = -sign;
        }
        pend[rel] = old ^ l;
    }
    sign
}

#[derive(Debug, Clone, Copy)]
struct Transition {
    from: u32,
    to: u32,
    x: bool,
    z: bool,
    coeff: C64,
    upow: u8,
}

/// The transfer operator A_M(u) as per-site transition tables over bond
/// states, valid for every u at once.
pub struct LocalizedChain {
    m: usize,
    /// Bond-state count at each cut, index 0 (before site 1) to M.
    cuts: Vec<usize>,
    /// Transitions across site s, at index s - 1.
    site_trans: Vec<Vec<Transition>>,
    /// States at the last cut that the chain projects onto.
    finals: Vec<usize>,
}

impl LocalizedChain {
    pub fn build(spec: &CircuitSpec) -> FfdResult<Self> {
        let m = spec.m();
        let slots = match spec.family() {
            Family::I => 3u8,
            _ => 4u8,
        };
        // every step is absorbed at the first site its letters can touch
        let mut absorb: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
        for step in spec.chain_steps() {
            absorb[step.saturating_sub(2).max(1)].push(step);
        }

        let mut cut: Vec<Key> = (0..slots).map(|b| (b, [0u8; 5])).collect();
        let mut cuts = vec![cut.len()];
        let mut site_trans = Vec::with_capacity(m);
        for s in 1..=m {
            // start from identity paths off the previous cut, then fold in
            // every step that begins at this site, earliest first
            let mut paths: Vec<(u32, Key, C64, u8)> = cut
                .iter()
                .enumerate()
                .map(|(i, k)| (i as u32, *k, C64::new(1.0, 0.0), 0u8))
                .collect();
            for &step in &absorb[s] {
                let entries = step_entries(spec, step);
                let mut grown: BTreeMap<(u32, Key, u8), C64> = BTreeMap::new();
                for &(from, key, coeff, upow) in &paths {
                    for (b_out, terms) in entries[key.0 as usize].iter().enumerate() {
                        for t in terms {
                            let mut pend = key.1;
                            let mut c = coeff * t.coeff;
                            for &g in &t.gens {
                                c *= merge_generator(&mut pend, g, s);
                            }
                            if c == C64::default() {
                                continue;
                            }
                            *grown
                                .entry((from, (b_out as u8, pend), upow + t.upow))
                                .or_default() += c;
                        }
                    }
                }
                paths = grown
                    .into_iter()
                    .filter(|(_, c)| *c != C64::default())
                    .map(|((from, key, upow), c)| (from, key, c, upow))
                    .collect();
            }

            // each path leaves one letter on this site and advances the cut
            let mut registry: BTreeMap<Key, u32> = BTreeMap::new();
            for &(_, (b, pend), _, _) in &paths {
                let out = (b, [pend[1], pend[2], pend[3], pend[4], 0]);
                let next = registry.len() as u32;
                registry.entry(out).or_insert(next);
            }
            // renumber in key order so the build is order-independent
            let mut next_cut: Vec<Key> = registry.keys().copied().collect();
            next_cut.sort_unstable();
            let ids: BTreeMap<Key, u32> = next_cut
                .iter()
                .enumerate()
                .map(|(i, k)| (*k, i as u32))
                .collect();
            if next_cut.len() > MAX_CUT_STATES {
                return Err(FfdError::Resource(format!(
                    "bond-state count {} at site {s} exceeds {MAX_CUT_STATES}",
                    next_cut.len()
                )));
            }
            let mut merged: BTreeMap<(u32, u32, u8, u8), C64> = BTreeMap::new();
            for (from, (b, pend), coeff, upow) in paths {
                let out = (b, [pend[1], pend[2], pend[3], pend[4], 0]);
                *merged.entry((from, ids[&out], pend[0], upow)).or_default() += coeff;
            }
            site_trans.push(
                merged
                    .into_iter()
                    .filter(|(_, c)| *c != C64::default())
                    .map(|((from, to, letter, upow), coeff)| Transition {
                        from,
                        to,
                        x: letter & 1 != 0,
                        z: letter & 2 != 0,
                        coeff,
                        upow,
                    })
                    .collect(),
            );
            cuts.push(next_cut.len());
            cut = next_cut;
        }

        let mut finals = Vec::new();
        for (i, &(b, pend)) in cut.iter().enumerate() {
            if pend != [0u8; 5] {
                return Err(FfdError::Consistency(format!(
                    "pending letters survive past site {m}"
                )));
            }
            if b == 0 {
                finals.push(i);
            }
        }
        if finals.is_empty() {
            return Err(FfdError::Consistency(
                "no accepting bond state at the last cut".into(),
            ));
        }
        Ok(LocalizedChain {
            m,
            cuts,
            site_trans,
            finals,
        })
    }

    pub fn sites(&self) -> usize {
        self.m
    }

    /// Largest bond-state count over all cuts.
    pub fn max_cut(&self) -> usize {
        self.cuts.iter().copied().max().unwrap_or(0)
    }

    /// Expand the chain into an explicit operator sum at one value of u.
    /// Exponential in M; meant for cross-checks at small sizes.
    pub fn contract(&self, u: C64) -> FfdResult<OperatorSum> {
        if self.m > 16 {
            return Err(FfdError::Resource(format!(
                "refusing to expand a chain on {} sites into words",
                self.m
            )));
        }
        let mut acc: Vec<BTreeMap<PauliWord, C64>> = (0..self.cuts[0])
            .map(|_| {
                let mut m = BTreeMap::new();
                m.insert(PauliWord::identity(self.m), C64::new(1.0, 0.0));
                m
            })
            .collect();
        for s in 1..=self.m {
            let mut next: Vec<BTreeMap<PauliWord, C64>> =
                (0..self.cuts[s]).map(|_| BTreeMap::new()).collect();
            for t in &self.site_trans[s - 1] {
                let w = t.coeff * u.powi(t.upow as i32);
                for (word, c) in &acc[t.from as usize] {
                    let mut word = word.clone();
                    if t.x || t.z {
                        word.set_letter(s, t.x, t.z);
                    }
                    *next[t.to as usize].entry(word).or_default() += c * w;
                }
            }
            acc = next;
        }
        let mut out = OperatorSum::zero(self.m);
        for &f in &self.finals {
            for (word, c) in &acc[f] {
                out.add_word(word.clone(), *c);
            }
        }
        out.prune();
        Ok(out)
    }

    /// <ψ| A(u1) · mid · A(u2) |ψ> over a product state, contracted site by
    /// site with power-of-two rescaling of the bond environment.
    pub fn sandwich(
        &self,
        u1: C64,
        u2: C64,
        mid: &PauliString,
        state: &ProductState,
    ) -> FfdResult<C64> {
        let (mant, exp2) = self.sandwich_scaled(u1, u2, mid, state)?;
        let result = C64::new(ldexp2(mant.re, exp2), ldexp2(mant.im, exp2));
        if !result.re.is_finite() || !result.im.is_finite() {
            return Err(FfdError::Resource(
                "sandwich value exceeds floating-point range".into(),
            ));
        }
        Ok(result)
    }

    /// [`LocalizedChain::sandwich`] with the value split as (mantissa, binary
    /// exponent), for arguments that drive it outside double range.
    pub fn sandwich_scaled(
        &self,
        u1: C64,
        u2: C64,
        mid: &PauliString,
        state: &ProductState,
    ) -> FfdResult<(C64, i32)> {
        if mid.word.sites() != self.m || state.sites() != self.m {
            return Err(FfdError::Argument(format!(
                "sandwich needs {} sites (mid has {}, state has {})",
                self.m,
                mid.word.sites(),
                state.sites()
            )));
        }
        let mut env = vec![C64::new(1.0, 0.0); self.cuts[0] * self.cuts[0]];
        let mut exp2: i32 = 0;
        for s in 1..=self.m {
            let (f_in, f_out) = (self.cuts[s - 1], self.cuts[s]);
            let trans = &self.site_trans[s - 1];
            let (a, b) = state.site(s);
            let psi = [a, b];
            let (mx, mz) = mid.word.letter(s);
            let xmat = letter_matrix(mx, mz);
            // per-letter row vector ψ†L and column vector (mid L)ψ
            let mut rows = [[C64::default(); 2]; 4];
            let mut cols = [[C64::default(); 2]; 4];
            for l in 0..4usize {
                let lm = letter_matrix(l & 1 != 0, l & 2 != 0);
                for q in 0..2 {
                    rows[l][q] = psi[0].conj() * lm[0][q] + psi[1].conj() * lm[1][q];
                }
                let lp = [
                    lm[0][0] * psi[0] + lm[0][1] * psi[1],
                    lm[1][0] * psi[0] + lm[1][1] * psi[1],
                ];
                for p in 0..2 {
                    cols[l][p] = xmat[p][0] * lp[0] + xmat[p][1] * lp[1];
                }
            }
            let mut half = vec![C64::default(); f_out * f_in * 2];
            for t in trans {
                let w = t.coeff * u1.powi(t.upow as i32);
                let r = rows[(t.x as usize) | ((t.z as usize) << 1)];
                for j in 0..f_in {
                    let e = env[t.from as usize * f_in + j];
                    if e == C64::default() {
                        continue;
                    }
                    let base = (t.to as usize * f_in + j) * 2;
                    half[base] += e * w * r[0];
                    half[base + 1] += e * w * r[1];
                }
            }
            let mut next = vec![C64::default(); f_out * f_out];
            for t in trans {
                let w = t.coeff * u2.powi(t.upow as i32);
                let c = cols[(t.x as usize) | ((t.z as usize) << 1)];
                for i in 0..f_out {
                    let base = (i * f_in + t.from as usize) * 2;
                    let dot = half[base] * c[0] + half[base + 1] * c[1];
                    next[i * f_out + t.to as usize] += dot * w;
                }
            }
            env = next;
            let peak = env
                .iter()
                .map(|c| c.re.abs().max(c.im.abs()))
                .fold(0.0f64, f64::max);
            if peak == 0.0 {
                return Ok((C64::default(), 0));
            }
            if !(1e-60..=1e60).contains(&peak) {
                let shift = peak.log2().round() as i32;
                let scale = (2.0f64).powi(-shift);
                for c in env.iter_mut() {
                    *c *= scale;
                }
                exp2 += shift;
            }
        }
        let f = self.cuts[self.m];
        let mut total = C64::default();
        for &i in &self.finals {
            for &j in &self.finals {
                total += env[i * f + j];
            }
        }
        Ok((total * mid.phase_factor(), exp2))
    }
}

/// <ψ|Ψ_s|ψ> for a finite mode, evaluated in O(M) through the chain.
pub fn mode_expectation(
    spec: &CircuitSpec,
    chain: &LocalizedChain,
    sp: &Spectrum,
    s: i32,
    state: &ProductState,
) -> FfdResult<C64> {
    if s == 0 {
        return Err(FfdError::Argument(
            "finite modes are labelled ±1..=±S".into(),
        ));
    }
    let k = s.unsigned_abs() as usize;
    if k > sp.mode_count() {
        return Err(FfdError::Argument(format!(
            "mode {s} outside ±1..=±{}",
            sp.mode_count()
        )));
    }
    let (nm, ne) = sp.norm[k - 1];
    let v = C64::new(0.0, if s > 0 { sp.u[k - 1] } else { -sp.u[k - 1] });
    let (raw, re2) = chain.sandwich_scaled(v, -v, &spec.edge_operator(), state)?;
    let shift = re2 - ne;
    Ok(C64::new(
        ldexp2(raw.re / nm, shift),
        ldexp2(raw.im / nm, shift),
    ))
}
