use nalgebra::DMatrix;

use super::Poly;

/// Scalar linear differential operator Σⱼ aⱼ(x)·(d/dx)ʲ with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarOp {
    coeffs: Vec<Poly>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ScalarOp {
    /// `coeffs[j]` multiplies the j-th derivative.
    pub fn new(mut coeffs: Vec<Poly>) -> Self {
        while coeffs.last().is_some_and(Poly::is_zero) {
            coeffs.pop();
        }
        ScalarOp { coeffs }
    }

    pub fn zero() -> Self {
        ScalarOp::default()
    }

    pub fn constant(c: f64) -> Self {
        ScalarOp::new(vec![Poly::constant(c)])
    }

    /// Multiplication by x.
    pub fn x() -> Self {
        ScalarOp::new(vec![Poly::monomial(1, 1.0)])
    }

    /// d/dx
    pub fn d() -> Self {
        ScalarOp::new(vec![Poly::zero(), Poly::constant(1.0)])
    }

    pub fn coeff(&self, j: usize) -> Poly {
        self.coeffs.get(j).cloned().unwrap_or_default()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        let mut dp = p.clone();
        for a in &self.coeffs {
            out = &out + &(a * &dp);
            dp = dp.derivative();
        }
        out
    }

    pub fn add(&self, other: &ScalarOp) -> ScalarOp {
        let n = self.coeffs.len().max(other.coeffs.len());
        ScalarOp::new((0..n).map(|j| &self.coeff(j) + &other.coeff(j)).collect())
    }

    pub fn sub(&self, other: &ScalarOp) -> ScalarOp {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> ScalarOp {
        ScalarOp::new(self.coeffs.iter().map(|a| a.scale(s)).collect())
    }

    /// self ∘ other
    pub fn compose(&self, other: &ScalarOp) -> ScalarOp {
        let mut out = vec![Poly::zero(); self.order() + other.order() + 1];
        for (j, a) in self.coeffs.iter().enumerate() {
            for (k, b) in other.coeffs.iter().enumerate() {
                let mut db = b.clone();
                let mut derivs = vec![b.clone()];
                for _ in 0..j {
                    db = db.derivative();
                    derivs.push(db.clone());
                }
                for i in 0..=j {
                    let term = (a * &derivs[j - i]).scale(binomial(j, i));
                    out[k + i] = &out[k + i] + &term;
                }
            }
        }
        ScalarOp::new(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.max_abs()))
    }

    /// Matrix on the monomials 1, x, …, x^deg with rows for image degrees 0..rows.
    pub fn matrix_rep(&self, deg: usize, rows: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows, deg + 1);
        for col in 0..=deg {
            let img = self.apply(&Poly::monomial(col, 1.0));
            for (k, &c) in img.coeffs().iter().enumerate() {
                if k < rows {
                    m[(k, col)] = c;
                }
            }
        }
        m
    }

    /// Highest image degree for inputs of degree `deg`.
    pub fn image_degree(&self, deg: usize) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter_map(|(j, a)| a.degree().filter(|_| j <= deg).map(|d| d + deg - j))
            .max()
            .unwrap_or(0)
    }
}
