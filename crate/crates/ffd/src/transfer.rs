//! Operator-valued transfer recursions.
//!
//! Each family admits four interlocking sequences A_m, B_m, C_m, D_m of
//! operator polynomials in a spectral parameter u; A_M at u = 1 is the full
//! driving period and the family A_M(u) at fixed angles commutes for all u.
//! The sequences advance by the family stride and are represented here as
//! exact Pauli sums so that every algebraic identity can be checked term by
//! term.  B and C pick up a trailing generator one and two sites past the
//! current index, so everything lives on a register of M + 2 sites.

use crate::circuit::{CircuitSpec, Family};
use crate::error::FfdResult;
use crate::pauli::OperatorSum;
use crate::C64;

/// The four recursion sequences at every milestone index 0, s, 2s, ..., M
/// (s the family stride), on a register of M + 2 sites.
#[derive(Debug, Clone)]
pub struct TransferOps {
    pub indices: Vec<usize>,
    pub a: Vec<OperatorSum>,
    pub b: Vec<OperatorSum>,
    pub c: Vec<OperatorSum>,
    pub d: Vec<OperatorSum>,
    pub n_ext: usize,
}

impl TransferOps {
    /// Position of milestone index `idx` in the vectors.
    pub fn pos(&self, idx: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == idx)
    }

    /// A_M restricted to the physical register of M sites.
    pub fn a_full(&self) -> FfdResult<OperatorSum> {
        let last = self.a.last().expect("nonempty by construction");
        last.restricted(self.n_ext - 2)
    }
}

fn i_u(u: C64) -> C64 {
    C64::new(0.0, 1.0) * u
}

fn h(j: usize, n: usize) -> FfdResult<OperatorSum> {
    Ok(OperatorSum::from_string(
        &CircuitSpec::generator(j, n)?,
        C64::new(1.0, 0.0),
    ))
}

/// Run the family recursion at spectral parameter `u`.
pub fn transfer_ops(spec: &CircuitSpec, u: C64) -> FfdResult<TransferOps> {
    let m_sys = spec.m();
    let n = m_sys + 2;
    let stride = spec.family().stride();
    let one = C64::new(1.0, 0.0);

    let h1 = CircuitSpec::generator(1, n)?;
    let h2 = CircuitSpec::generator(2, n)?;
    let mut indices = vec![0usize];
    let mut a = vec![OperatorSum::identity(n)];
    let mut b = vec![OperatorSum::from_string(&h1, i_u(u))];
    let mut c = vec![OperatorSum::from_string(&h2, i_u(u))];
    let mut d = vec![OperatorSum::from_string(&h1.mul(&h2), one)];

    let mut m = stride;
    while m <= m_sys {
        let (pa, pb, pc, pd) = (
            a.last().unwrap(),
            b.last().unwrap(),
            c.last().unwrap(),
            d.last().unwrap(),
        );
        let mi = m as isize;
        let (x0, y0) = (spec.x(mi), spec.y(mi));
        let (na, nb, nc, nd) = match spec.family() {
            Family::I => {
                let na = pa.scaled(x0.into()).add(&pb.scaled(y0.into()));
                let nb = pc.clone();
                let nc = pa
                    .scaled(i_u(u))
                    .mul_string(&CircuitSpec::generator(m + 2, n)?, one);
                (na, nb, nc, pd.clone())
            }
            Family::II => {
                let (x1, y1) = (spec.x(mi - 1), spec.y(mi - 1));
                let hp1 = CircuitSpec::generator(m + 1, n)?;
                let hp2 = CircuitSpec::generator(m + 2, n)?;
                let na = pa
                    .scaled((x0 * x1).into())
                    .add(&pb.scaled(y1.into()))
                    .add(&pc.scaled((x1 * y0).into()));
                let nb = pa.scaled(i_u(u)).mul_string(&hp1, one);
                let nc = pa
                    .scaled(x1.into())
                    .add(&pb.scaled((x0 * y1).into()))
                    .add(&pd.scaled((y1 * y0).into()))
                    .scaled(i_u(u))
                    .mul_string(&hp2, one);
                let nd = pa
                    .scaled(x0.into())
                    .add(&pc.scaled(y0.into()))
                    .mul_string(&hp1, one)
                    .mul_string(&hp2, one);
                (na, nb, nc, nd)
            }
            Family::III => {
                let (x1, y1) = (spec.x(mi - 1), spec.y(mi - 1));
                let (x2, y2) = (spec.x(mi - 2), spec.y(mi - 2));
                let hm = h(m, n)?;
                let hp1 = CircuitSpec::generator(m + 1, n)?;
                let hp2 = CircuitSpec::generator(m + 2, n)?;
                // κ±_m(u): the step couples to its own generator
                let kplus = OperatorSum::scalar(n, x0.into()).add(&hm.scaled(i_u(u) * y0));
                let kminus =
                    OperatorSum::scalar(n, u * x0).add(&hm.scaled(C64::new(0.0, -y0)));
                let na = pa
                    .scaled((x1 * x2).into())
                    .mul(&kplus)
                    .add(&pb.scaled(y2.into()))
                    .add(&pc.scaled((x2 * y1).into()));
                let nb = pa
                    .scaled(u * x2)
                    .add(&pb.scaled((x1 * y2).into()).mul(&kminus))
                    .add(&pd.scaled((u * y2 * y1).into()))
                    .scaled(C64::new(0.0, 1.0))
                    .mul_string(&hp1, one);
                let nc = pa
                    .scaled(u * x1 * x2)
                    .add(
                        &pb.scaled(y2.into())
                            .add(&pc.scaled((x2 * y1).into()))
                            .mul(&kminus),
                    )
                    .scaled(C64::new(0.0, 1.0))
                    .mul_string(&hp2, one);
                let nd = pa
                    .scaled(x2.into())
                    .add(&pd.scaled((y1 * y2).into()))
                    .mul(&kplus)
                    .add(&pb.scaled((y2 * x1).into()))
                    .mul_string(&hp1, one)
                    .mul_string(&hp2, one);
                (na, nb, nc, nd)
            }
        };
        indices.push(m);
        a.push(na);
        b.push(nb);
        c.push(nc);
        d.push(nd);
        m += stride;
    }

    Ok(TransferOps {
        indices,
        a,
        b,
        c,
        d,
        n_ext: n,
    })
}

/// The full period V = G G^T as an exact Pauli sum, built by multiplying
/// gates in circuit order — deliberately independent of the recursion.
pub fn gate_product_period(spec: &CircuitSpec, n: usize) -> FfdResult<OperatorSum> {
    let mut v = OperatorSum::identity(n);
    for j in spec.floquet_order() {
        v = v.mul(&spec.gate(j, n)?);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::commutator;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn smallest_chain_closed_form() {
        let spec = CircuitSpec::new(Family::I, 1, vec![0.83]).unwrap();
        let u = c(0.4, -0.2);
        let ops = transfer_ops(&spec, u).unwrap();
        let h1 = CircuitSpec::generator(1, 3).unwrap();
        let mut want = OperatorSum::scalar(3, spec.x(1).into());
        want.add_scaled(
            &OperatorSum::from_string(&h1, c(1.0, 0.0)),
            c(0.0, 1.0) * u * spec.y(1),
        );
        assert!(ops.a.last().unwrap().sub(&want).coeff_norm() < 1e-15);
    }

    #[test]
    fn value_at_zero_is_cos_product() {
        for (family, m) in [(Family::I, 5), (Family::II, 6), (Family::III, 6)] {
            let spec = CircuitSpec::seeded(family, m, 3).unwrap();
            let ops = transfer_ops(&spec, c(0.0, 0.0)).unwrap();
            let a = ops.a.last().unwrap();
            let want = OperatorSum::scalar(m + 2, spec.x_product().into());
            assert!(a.sub(&want).coeff_norm() < 1e-14, "{family} M={m}");
        }
    }

    #[test]
    fn recursion_at_one_equals_gate_product() {
        for (family, m) in [(Family::I, 4), (Family::II, 4), (Family::III, 6)] {
            let spec = CircuitSpec::seeded(family, m, 11).unwrap();
            let ops = transfer_ops(&spec, c(1.0, 0.0)).unwrap();
            let v = gate_product_period(&spec, m + 2).unwrap();
            let diff = ops.a.last().unwrap().sub(&v).coeff_norm();
            assert!(diff < 1e-13, "{family} M={m}: {diff:e}");
        }
    }

    #[test]
    fn transfer_operators_commute_at_different_parameters() {
        let u = c(0.7, 0.3);
        let v = c(-0.2, 0.9);
        for (family, m) in [(Family::I, 5), (Family::II, 6), (Family::III, 6)] {
            let spec = CircuitSpec::seeded(family, m, 7).unwrap();
            let au = transfer_ops(&spec, u).unwrap();
            let av = transfer_ops(&spec, v).unwrap();
            let comm = commutator(au.a.last().unwrap(), av.a.last().unwrap());
            assert!(comm.coeff_norm() < 1e-12, "{family} M={m}");
        }
    }

    #[test]
    fn sequence_supports_stay_in_window() {
        let spec = CircuitSpec::seeded(Family::III, 9, 5).unwrap();
        let ops = transfer_ops(&spec, c(0.3, 0.1)).unwrap();
        assert_eq!(ops.indices, vec![0, 3, 6, 9]);
        assert!(ops.a.last().unwrap().support_max() <= 9);
        assert!(ops.b.last().unwrap().support_max() <= 10);
        assert!(ops.c.last().unwrap().support_max() <= 11);
        assert!(ops.d.last().unwrap().support_max() <= 11);
        assert!(ops.a_full().is_ok());
    }

    #[test]
    fn scalar_square_for_single_gate() {
        // A_1(u) A_1(-u) = x^2 + u^2 y^2 exactly
        let spec = CircuitSpec::new(Family::I, 1, vec![1.02]).unwrap();
        let u = c(0.3, 0.55);
        let plus = transfer_ops(&spec, u).unwrap();
        let minus = transfer_ops(&spec, -u).unwrap();
        let prod = plus.a.last().unwrap().mul(minus.a.last().unwrap());
        let want = OperatorSum::scalar(
            3,
            C64::from(spec.x(1) * spec.x(1)) + u * u * spec.y(1) * spec.y(1),
        );
        assert!(prod.sub(&want).coeff_norm() < 1e-15);
    }
}
