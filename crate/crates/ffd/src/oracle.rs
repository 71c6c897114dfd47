//! Cross-checks that tie the polynomial data back to the full many-body
//! problem: explicit fermion mode operators, the frozen edge mode, dense
//! eigenvalue multisets, a state-vector quench reference, and the conserved
//! charges.  Everything here is exact up to floating point and deliberately
//! avoids the fast paths used elsewhere, so agreement is meaningful.

use ndarray::{Array1, Array2};

use crate::circuit::{CircuitSpec, Family};
use crate::dense;
use crate::error::{FfdError, FfdResult};
use crate::lapack::eigh_real;
use crate::pauli::{anticommutator, commutator, OperatorSum, ProductState};
use crate::spectral::Spectrum;
use crate::transfer::transfer_ops;
use crate::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A_M(u) restricted to the M physical sites.
pub fn transfer_a(spec: &CircuitSpec, u: C64) -> FfdResult<OperatorSum> {
    transfer_ops(spec, u)?.a_full()
}

/// The edge operator as a sum on M sites.
pub fn edge_sum(spec: &CircuitSpec) -> OperatorSum {
    OperatorSum::from_string(&spec.edge_operator(), c(1.0, 0.0))
}

/// Unnormalized mode operator A(v) chi A(-v) on M sites.
pub fn unnormalized_mode(spec: &CircuitSpec, v: C64) -> FfdResult<OperatorSum> {
    let a_plus = transfer_a(spec, v)?;
    let a_minus = transfer_a(spec, -v)?;
    Ok(a_plus.mul(&edge_sum(spec)).mul(&a_minus))
}

/// Normalized fermion mode for signed index s (s = k or -k, k >= 1).
pub fn fermion_mode(spec: &CircuitSpec, spectrum: &Spectrum, s: i32) -> FfdResult<OperatorSum> {
    if s == 0 {
        return zero_mode(spec, spectrum);
    }
    let k = s.unsigned_abs() as usize;
    if k > spectrum.mode_count() {
        return Err(FfdError::Argument(format!(
            "mode index {s} out of range for {} modes",
            spectrum.mode_count()
        )));
    }
    let uk = spectrum.u[k - 1];
    let nk = spectrum.n_sq[k - 1].sqrt();
    let iu = c(0.0, if s > 0 { uk } else { -uk });
    Ok(unnormalized_mode(spec, iu)?.scaled(c(1.0 / nk, 0.0)))
}

/// The part of the edge operator frozen by the dynamics: chi minus its
/// overlap with every finite mode.  Exists for the three-sublattice family.
pub fn frozen_part(spec: &CircuitSpec, spectrum: &Spectrum) -> FfdResult<OperatorSum> {
    let cs = spectrum.c.as_ref().ok_or_else(|| {
        FfdError::Argument("frozen mode only exists for the three-sublattice family".into())
    })?;
    let mut q = edge_sum(spec);
    for (k, &ck) in cs.iter().enumerate() {
        for sign in [1i32, -1] {
            let psi = fermion_mode(spec, spectrum, sign * (k as i32 + 1))?;
            q.add_scaled(&psi, c(-ck, 0.0));
        }
    }
    q.prune();
    Ok(q)
}

/// Normalized zero mode Psi_0 = Q / c0.
pub fn zero_mode(spec: &CircuitSpec, spectrum: &Spectrum) -> FfdResult<OperatorSum> {
    let c0_sq = spectrum.c0_sq.ok_or_else(|| {
        FfdError::Argument("frozen mode only exists for the three-sublattice family".into())
    })?;
    if c0_sq <= 0.0 {
        return Err(FfdError::SpectralStructure(
            "frozen-mode weight vanishes; cannot normalize".into(),
        ));
    }
    Ok(frozen_part(spec, spectrum)?.scaled(c(1.0 / c0_sq.sqrt(), 0.0)))
}

/// chi conjugated by A(iu) and normalized: (chi + A(iu) chi A(iu)^{-1}) / 2.
/// As u grows this tends to the frozen part with an O(1/u) tail; a two-point
/// Richardson step removes the linear tail.
pub fn conjugated_edge_half(spec: &CircuitSpec, u: f64) -> FfdResult<OperatorSum> {
    let iu = c(0.0, u);
    let scalar = {
        let chain = crate::poly::scalar_chain::<f64>(spec);
        // A(iu) A(-iu) = P(-u^2) times identity
        chain.a.eval(-u * u)
    };
    let conj = unnormalized_mode(spec, iu)?.scaled(c(1.0 / scalar, 0.0));
    Ok(edge_sum(spec).add(&conj).scaled(c(0.5, 0.0)))
}

/// Frozen part via the large-parameter limit, independent of the overlap
/// coefficients: 2 Q(2u) - Q(u).
pub fn frozen_part_by_limit(spec: &CircuitSpec, u: f64) -> FfdResult<OperatorSum> {
    let q1 = conjugated_edge_half(spec, u)?;
    let q2 = conjugated_edge_half(spec, 2.0 * u)?;
    Ok(q2.scaled(c(2.0, 0.0)).sub(&q1))
}

/// Dense eigenvalues of the period operator, via a Hermitian combination of
/// U and U^dagger that shares its eigenbasis (U is unitary, hence normal).
/// The gate ladder is a palindrome of symmetric factors, so U = U^T and the
/// combination (U + U^†)/2 + gamma (U - U^†)/(2i) = Re U + gamma Im U is
/// real symmetric; a real eigensolve therefore suffices.  Returns the
/// unit-circle eigenvalues in eigenvector order together with the largest
/// residual max_j |U v_j - lambda_j v_j|.
pub fn dense_eigenvalues(spec: &CircuitSpec) -> FfdResult<(Vec<C64>, f64)> {
    let m = spec.m();
    // the gate ladder reproduces the recursion at unit argument and costs
    // O(gates 4^m) per pass instead of one pass per expanded Pauli term
    let u_mat = dense::period_matrix(spec, m)?;
    let dim = u_mat.nrows();

    // mixing weights that keep distinct unit-circle points distinct
    for gamma in [0.618_033_988_749_894_9_f64, 0.267_949_192_431_122_7, 1.532_088_886_237_956] {
        let mut herm = Array2::<f64>::zeros((dim, dim));
        for r in 0..dim {
            for col in 0..dim {
                // symmetrized against roundoff in the ladder
                let re = 0.5 * (u_mat[(r, col)].re + u_mat[(col, r)].re);
                let im = 0.5 * (u_mat[(r, col)].im + u_mat[(col, r)].im);
                herm[(r, col)] = re + gamma * im;
            }
        }
        let (_, vecs) = eigh_real(&herm)?;
        let vecs_c = vecs.mapv(|x| c(x, 0.0));
        let uw = dense::period_apply_mat(spec, m, &vecs_c)?;
        let mut lambdas = Vec::with_capacity(dim);
        let mut worst: f64 = 0.0;
        for j in 0..dim {
            let lambda: C64 = (0..dim).map(|r| uw[(r, j)] * vecs[(r, j)]).sum();
            let mut resid: f64 = 0.0;
            for r in 0..dim {
                resid = resid.max((uw[(r, j)] - lambda * vecs[(r, j)]).norm());
            }
            worst = worst.max(resid);
            lambdas.push(lambda);
        }
        if worst < 1e-8 {
            return Ok((lambdas, worst));
        }
    }
    Err(FfdError::Degeneracy(
        "could not isolate a joint eigenbasis of the period operator".into(),
    ))
}

/// The multiset of eigenvalues the mode picture predicts: every sign choice
/// over the modes, exp(i sum_k sigma_k eps_k), with multiplicity 2^(M - S).
/// Nearby clusters are merged; returns (value, count) pairs.
pub fn predicted_eigenvalue_clusters(
    spectrum: &Spectrum,
    m: usize,
    merge_tol: f64,
) -> Vec<(C64, usize)> {
    let s_count = spectrum.mode_count();
    let base_mult = 1usize << (m - s_count);
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for mask in 0u64..(1u64 << s_count) {
        let mut angle = 0.0;
        for k in 0..s_count {
            let sigma = if (mask >> k) & 1 == 1 { 1.0 } else { -1.0 };
            angle += sigma * spectrum.epsilon[k];
        }
        let val = C64::from_polar(1.0, angle);
        match clusters
            .iter_mut()
            .find(|(v, _)| (*v - val).norm() < merge_tol)
        {
            Some((_, count)) => *count += base_mult,
            None => clusters.push((val, base_mult)),
        }
    }
    clusters
}

/// Compare a dense eigenvalue list against predicted clusters; every dense
/// eigenvalue must land in exactly one cluster and the counts must agree.
/// Returns the largest distance from a dense eigenvalue to its cluster.
pub fn match_eigenvalue_multisets(
    dense_vals: &[C64],
    clusters: &[(C64, usize)],
    tol: f64,
) -> FfdResult<f64> {
    let total: usize = clusters.iter().map(|(_, n)| n).sum();
    if total != dense_vals.len() {
        return Err(FfdError::Consistency(format!(
            "predicted {total} eigenvalues, dense has {}",
            dense_vals.len()
        )));
    }
    let mut counts = vec![0usize; clusters.len()];
    let mut worst: f64 = 0.0;
    for &z in dense_vals {
        let (best, dist) = clusters
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, (z - v).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("clusters nonempty");
        if dist > tol {
            return Err(FfdError::Consistency(format!(
                "dense eigenvalue {z} is {dist:e} from every predicted cluster"
            )));
        }
        counts[best] += 1;
        worst = worst.max(dist);
    }
    for (i, (v, want)) in clusters.iter().enumerate() {
        if counts[i] != *want {
            return Err(FfdError::Consistency(format!(
                "cluster at {v} holds {} dense eigenvalues, predicted {want}",
                counts[i]
            )));
        }
    }
    Ok(worst)
}

/// State-vector quench reference: the edge expectation after t periods, for
/// t = 0..=t_max, evolved gate by gate.
pub fn quench_reference(
    spec: &CircuitSpec,
    state: &ProductState,
    t_max: usize,
) -> FfdResult<Vec<f64>> {
    let n = spec.m();
    if state.sites() != n {
        return Err(FfdError::Argument(format!(
            "state on {} sites does not match M = {n}",
            state.sites()
        )));
    }
    let chi = edge_sum(spec);
    let mut v = Array1::from(state.to_vector());
    let mut out = Vec::with_capacity(t_max + 1);
    for _ in 0..=t_max {
        let e = dense::expect(&chi, &v)?;
        if e.im.abs() > 1e-10 {
            return Err(FfdError::Consistency(format!(
                "edge expectation has imaginary part {:e}",
                e.im
            )));
        }
        out.push(e.re);
        v = dense::period_apply_vec(spec, n, &v)?;
    }
    Ok(out)
}

/// Conserved charge built from the gate angles; known in closed form for the
/// staircase and two-sublattice families.
pub fn charge(spec: &CircuitSpec) -> FfdResult<OperatorSum> {
    let m = spec.m();
    let n = m;
    let xi = |j: isize| spec.x(j);
    let yi = |j: isize| spec.y(j);
    let mut h_sum = OperatorSum::zero(n);
    match spec.family() {
        Family::I => {
            for j in 1..=m {
                let ji = j as isize;
                let coeff = yi(ji) / (xi(ji - 2) * xi(ji - 1) * xi(ji));
                h_sum.add_scaled(
                    &OperatorSum::from_string(&CircuitSpec::generator(j, n)?, c(1.0, 0.0)),
                    c(coeff, 0.0),
                );
            }
        }
        Family::II => {
            for j in 1..=m {
                let ji = j as isize;
                let coeff = if j % 2 == 0 {
                    yi(ji) / (xi(ji - 2) * xi(ji))
                } else {
                    yi(ji) / (xi(ji - 2) * xi(ji - 1) * xi(ji) * xi(ji + 1))
                };
                h_sum.add_scaled(
                    &OperatorSum::from_string(&CircuitSpec::generator(j, n)?, c(1.0, 0.0)),
                    c(coeff, 0.0),
                );
            }
            // three-generator terms start on the odd sublattice
            for j in (1..=m).step_by(2) {
                let ji = j as isize;
                if j + 3 > m {
                    continue;
                }
                let coeff = (yi(ji) * yi(ji + 1) * yi(ji + 3))
                    / (xi(ji - 2) * xi(ji) * xi(ji + 1) * xi(ji + 3));
                let word = CircuitSpec::generator(j, n)?
                    .mul(&CircuitSpec::generator(j + 1, n)?)
                    .mul(&CircuitSpec::generator(j + 3, n)?);
                h_sum.add_scaled(&OperatorSum::from_string(&word, c(1.0, 0.0)), c(coeff, 0.0));
            }
        }
        Family::III => {
            return Err(FfdError::Argument(
                "no closed-form charge is implemented for the three-sublattice family".into(),
            ));
        }
    }
    Ok(h_sum)
}

/// Largest coefficient norm among the exchange-algebra combinations that
/// must vanish for the four sequences at two spectral parameters.
pub fn exchange_relation_residual(spec: &CircuitSpec, u: C64, v: C64) -> FfdResult<f64> {
    let at_u = transfer_ops(spec, u)?;
    let at_v = transfer_ops(spec, v)?;
    let (au, bu, cu, du) = (
        at_u.a.last().unwrap(),
        at_u.b.last().unwrap(),
        at_u.c.last().unwrap(),
        at_u.d.last().unwrap(),
    );
    let (av, bv, cv, dv) = (
        at_v.a.last().unwrap(),
        at_v.b.last().unwrap(),
        at_v.c.last().unwrap(),
        at_v.d.last().unwrap(),
    );
    let mut worst: f64 = 0.0;
    let mut track = |r: f64| worst = worst.max(r);

    // same-letter commutators vanish
    track(commutator(au, av).coeff_norm());
    track(commutator(bu, bv).coeff_norm());
    track(commutator(cu, cv).coeff_norm());
    track(commutator(du, dv).coeff_norm());

    // mixed-letter symmetrized commutators vanish
    track(commutator(au, bv).add(&commutator(bu, av)).coeff_norm());
    track(commutator(au, cv).add(&commutator(cu, av)).coeff_norm());
    track(commutator(bu, cv).add(&commutator(cu, bv)).coeff_norm());

    // weighted anticommutators balance: u {A(u), B(v)} = v {B(u), A(v)}
    track(
        anticommutator(au, bv)
            .scaled(u)
            .sub(&anticommutator(bu, av).scaled(v))
            .coeff_norm(),
    );
    track(
        anticommutator(au, cv)
            .scaled(u)
            .sub(&anticommutator(cu, av).scaled(v))
            .coeff_norm(),
    );

    // the bilinear sequence anticommutes symmetrically with A; in the
    // staircase family D never evolves and the relation does not apply
    if spec.family() != Family::I {
        track(
            anticommutator(au, dv)
                .sub(&anticommutator(du, av))
                .coeff_norm(),
        );
    }
    Ok(worst)
}
