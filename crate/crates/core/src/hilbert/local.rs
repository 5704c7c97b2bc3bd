use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{DenseMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinKind {
    Sx,
    Sy,
    Sz,
    Sp,
    Sm,
    I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BosonKind {
    A,
    Adag,
    N,
    I,
}

impl FromStr for SpinKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Sx" | "sx" => Ok(SpinKind::Sx),
            "Sy" | "sy" => Ok(SpinKind::Sy),
            "Sz" | "sz" => Ok(SpinKind::Sz),
            "Sp" | "sp" | "S+" => Ok(SpinKind::Sp),
            "Sm" | "sm" | "S-" => Ok(SpinKind::Sm),
            "I" | "i" => Ok(SpinKind::I),
            other => Err(Error::invalid(format!("unknown spin operator '{other}'"))),
        }
    }
}

impl FromStr for BosonKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(BosonKind::A),
            "adag" => Ok(BosonKind::Adag),
            "n" => Ok(BosonKind::N),
            "I" | "i" => Ok(BosonKind::I),
            other => Err(Error::invalid(format!("unknown boson operator '{other}'"))),
        }
    }
}

impl fmt::Display for SpinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpinKind::Sx => "Sx",
            SpinKind::Sy => "Sy",
            SpinKind::Sz => "Sz",
            SpinKind::Sp => "Sp",
            SpinKind::Sm => "Sm",
            SpinKind::I => "I",
        };
        f.write_str(s)
    }
}

/// Spin-S matrix in the `S^z` basis ordered `m = +S, …, -S`.
pub fn spin_matrix(kind: SpinKind, spin_levels: usize) -> Result<DenseMatrix> {
    if spin_levels < 2 {
        return Err(Error::invalid("spin_levels must be at least 2"));
    }
    let d = spin_levels;
    let s = (d as f64 - 1.0) / 2.0;
    let m = |i: usize| s - i as f64;
    // <m+1|S+|m> = sqrt(S(S+1) - m(m+1)); row i-1 holds m+1 when column i holds m.
    let raise = |i: usize| (s * (s + 1.0) - m(i) * (m(i) + 1.0)).sqrt();

    let mut out = DenseMatrix::zeros(d, d);
    match kind {
        SpinKind::I => {
            for i in 0..d {
                out[(i, i)] = C64::new(1.0, 0.0);
            }
        }
        SpinKind::Sz => {
            for i in 0..d {
                out[(i, i)] = C64::new(m(i), 0.0);
            }
        }
        SpinKind::Sp => {
            for i in 1..d {
                out[(i - 1, i)] = C64::new(raise(i), 0.0);
            }
        }
        SpinKind::Sm => {
            for i in 1..d {
                out[(i, i - 1)] = C64::new(raise(i), 0.0);
            }
        }
        SpinKind::Sx => {
            for i in 1..d {
                let v = C64::new(raise(i) / 2.0, 0.0);
                out[(i - 1, i)] = v;
                out[(i, i - 1)] = v;
            }
        }
        SpinKind::Sy => {
            for i in 1..d {
                let v = raise(i) / 2.0;
                out[(i - 1, i)] = C64::new(0.0, -v);
                out[(i, i - 1)] = C64::new(0.0, v);
            }
        }
    }
    Ok(out)
}

/// Truncated Fock-space matrix on `|0⟩ … |N_B - 1⟩`.
pub fn boson_matrix(kind: BosonKind, boson_levels: usize) -> Result<DenseMatrix> {
    if boson_levels == 0 {
        return Err(Error::invalid("boson_levels must be at least 1"));
    }
    let d = boson_levels;
    let mut out = DenseMatrix::zeros(d, d);
    match kind {
        BosonKind::I => {
            for i in 0..d {
                out[(i, i)] = C64::new(1.0, 0.0);
            }
        }
        BosonKind::N => {
            for i in 0..d {
                out[(i, i)] = C64::new(i as f64, 0.0);
            }
        }
        BosonKind::A => {
            for m in 1..d {
                out[(m - 1, m)] = C64::new((m as f64).sqrt(), 0.0);
            }
        }
        BosonKind::Adag => {
            for m in 1..d {
                out[(m, m - 1)] = C64::new((m as f64).sqrt(), 0.0);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        let mut m = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    fn comm(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        a * b - b * a
    }

    #[test]
    fn spin_half_examples() {
        let sz = spin_matrix(SpinKind::Sz, 2).unwrap();
        assert_eq!(sz[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(sz[(1, 1)], C64::new(-0.5, 0.0));
        let sp = spin_matrix(SpinKind::Sp, 2).unwrap();
        assert_eq!(sp[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(sp[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(sp[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(sp[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn spin_three_halves_sz() {
        let sz = spin_matrix(SpinKind::Sz, 4).unwrap();
        for (i, m) in [1.5, 0.5, -0.5, -1.5].iter().enumerate() {
            assert_eq!(sz[(i, i)].re, *m);
        }
    }

    #[test]
    fn spin_algebra_closes() {
        for d in [2usize, 3, 4] {
            let s = (d as f64 - 1.0) / 2.0;
            let sx = spin_matrix(SpinKind::Sx, d).unwrap();
            let sy = spin_matrix(SpinKind::Sy, d).unwrap();
            let sz = spin_matrix(SpinKind::Sz, d).unwrap();
            let sp = spin_matrix(SpinKind::Sp, d).unwrap();
            let sm = spin_matrix(SpinKind::Sm, d).unwrap();
            let i = C64::new(0.0, 1.0);

            let r = comm(&sx, &sy) - &sz * faer::Scale(i);
            assert!(max_abs_diff(&r, &DenseMatrix::zeros(d, d)) < 1e-12);
            assert!(max_abs_diff(&comm(&sz, &sp), &sp) < 1e-12);
            let neg_sm = &sm * faer::Scale(C64::new(-1.0, 0.0));
            assert!(max_abs_diff(&comm(&sz, &sm), &neg_sm) < 1e-12);

            let casimir = &sx * &sx + &sy * &sy + &sz * &sz;
            let expect = DenseMatrix::identity(d, d) * faer::Scale(C64::new(s * (s + 1.0), 0.0));
            assert!(max_abs_diff(&casimir, &expect) < 1e-12);

            let sp_from_xy = &sx + &sy * faer::Scale(i);
            assert!(max_abs_diff(&sp_from_xy, &sp) < 1e-12);
        }
    }

    #[test]
    fn boson_examples() {
        let adag = boson_matrix(BosonKind::Adag, 3).unwrap();
        assert_eq!(adag[(1, 0)].re, 1.0);
        assert!((adag[(2, 1)].re - 2f64.sqrt()).abs() < 1e-15);
        let n = boson_matrix(BosonKind::N, 3).unwrap();
        for k in 0..3 {
            assert_eq!(n[(k, k)].re, k as f64);
        }
        let a = boson_matrix(BosonKind::A, 3).unwrap();
        let ad_a = &adag * &a;
        assert!(max_abs_diff(&ad_a, &n) < 1e-14);
    }

    #[test]
    fn truncated_ladder_commutator() {
        let a = boson_matrix(BosonKind::A, 3).unwrap();
        let adag = boson_matrix(BosonKind::Adag, 3).unwrap();
        let c = comm(&a, &adag);
        let expect = [1.0, 1.0, -2.0];
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((c[(i, j)] - C64::new(e, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_sizes_and_names() {
        assert!(spin_matrix(SpinKind::Sz, 1).is_err());
        assert!(boson_matrix(BosonKind::A, 0).is_err());
        assert!("Sq".parse::<SpinKind>().is_err());
        assert!("b".parse::<BosonKind>().is_err());
        assert_eq!("Sp".parse::<SpinKind>().unwrap(), SpinKind::Sp);
        assert_eq!("adag".parse::<BosonKind>().unwrap(), BosonKind::Adag);
    }
}
