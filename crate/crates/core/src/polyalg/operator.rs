use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use super::{Poly, PolyAlgError, PolySpinor};
use crate::model::ProblemInstance;

/// Working variable of an operator: r, or x = r².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variable {
    R,
    X,
}

/// Factor multiplying the image of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Premultiplier {
    One,
    R,
    X,
}

/// Power of the working variable corresponding to a premultiplier.
pub(crate) fn premultiplier_shift(var: Variable, p: Premultiplier) -> Result<i32, PolyAlgError> {
    match (var, p) {
        (_, Premultiplier::One) => Ok(0),
        (Variable::R, Premultiplier::R) => Ok(1),
        (Variable::R, Premultiplier::X) => Ok(2),
        (Variable::X, Premultiplier::X) => Ok(1),
        (Variable::X, Premultiplier::R) => Err(PolyAlgError::Structure(
            "multiplication by r is not polynomial in x = r^2".into(),
        )),
    }
}

/// Finite Laurent polynomial Σ cₖ tᵏ with integer k of either sign.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Laurent(BTreeMap<i32, f64>);

impl Laurent {
    pub fn zero() -> Self {
        Laurent(BTreeMap::new())
    }

    pub fn term(k: i32, c: f64) -> Self {
        let mut l = Laurent::zero();
        l.add_term(k, c);
        l
    }

    pub fn from_poly(p: &Poly) -> Self {
        let mut l = Laurent::zero();
        for (k, &c) in p.coeffs().iter().enumerate() {
            l.add_term(k as i32, c);
        }
        l
    }

    pub fn add_term(&mut self, k: i32, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.0.entry(k).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.0.remove(&k);
        }
    }

    pub fn coeff(&self, k: i32) -> f64 {
        self.0.get(&k).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.0.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Lowest power whose coefficient exceeds `tol` in magnitude.
    pub fn min_power(&self, tol: f64) -> Option<i32> {
        self.terms().find(|(_, c)| c.abs() > tol).map(|(k, _)| k)
    }

    pub fn max_power(&self, tol: f64) -> Option<i32> {
        self.0.iter().rev().find(|(_, c)| c.abs() > tol).map(|(&k, _)| k)
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (k, c) in other.terms() {
            out.add_term(k, c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Laurent {
        let mut out = Laurent::zero();
        for (k, c) in self.terms() {
            out.add_term(k, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (i, a) in self.terms() {
            for (j, b) in other.terms() {
                out.add_term(i + j, a * b);
            }
        }
        out
    }

    /// Multiplies by t^k.
    pub fn shift(&self, k: i32) -> Laurent {
        Laurent(self.0.iter().map(|(&p, &c)| (p + k, c)).collect())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms().map(|(k, c)| c * t.powi(k)).sum()
    }

    /// Drops terms with magnitude at most `tol`.
    pub fn cleaned(&self, tol: f64) -> Laurent {
        Laurent(self.0.iter().filter(|(_, c)| c.abs() > tol).map(|(&k, &c)| (k, c)).collect())
    }
}

pub(crate) type LMat = [[Laurent; 2]; 2];

pub(crate) fn lmat_zero() -> LMat {
    Default::default()
}

pub(crate) fn lmat_map(m: &LMat, f: impl Fn(&Laurent) -> Laurent) -> LMat {
    [[f(&m[0][0]), f(&m[0][1])], [f(&m[1][0]), f(&m[1][1])]]
}

/// Constant matrix times Laurent matrix.
pub(crate) fn lmat_left(c: &Matrix2<f64>, m: &LMat) -> LMat {
    let mut out = lmat_zero();
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = m[0][j].scale(c[(i, 0)]).add(&m[1][j].scale(c[(i, 1)]));
        }
    }
    out
}

/// Laurent matrix times constant matrix.
pub(crate) fn lmat_right(m: &LMat, c: &Matrix2<f64>) -> LMat {
    let mut out = lmat_zero();
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = m[i][0].scale(c[(0, j)]).add(&m[i][1].scale(c[(1, j)]));
        }
    }
    out
}

/// A 2×2 first-order matrix differential operator
/// `first(t)·d/dt + zeroth(t)` with Laurent-polynomial entries in the working variable t.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    pub(crate) variable: Variable,
    pub(crate) premultiplier: Premultiplier,
    pub(crate) first: LMat,
    pub(crate) zeroth: LMat,
}

impl RadialOperator {
    pub fn zero(variable: Variable) -> Self {
        RadialOperator {
            variable,
            premultiplier: Premultiplier::One,
            first: lmat_zero(),
            zeroth: lmat_zero(),
        }
    }

    /// diag(d/dt, d/dt)
    pub fn derivative(variable: Variable) -> Self {
        let mut op = Self::zero(variable);
        op.first[0][0] = Laurent::term(0, 1.0);
        op.first[1][1] = Laurent::term(0, 1.0);
        op
    }

    /// diag(t d/dt, t d/dt)
    pub fn dilatation(variable: Variable) -> Self {
        let mut op = Self::zero(variable);
        op.first[0][0] = Laurent::term(1, 1.0);
        op.first[1][1] = Laurent::term(1, 1.0);
        op
    }

    /// Adds c·t^power·(d/dt)^order to entry (row, col).
    pub fn add_term(
        &mut self,
        row: usize,
        col: usize,
        power: i32,
        order: u8,
        c: f64,
    ) -> Result<(), PolyAlgError> {
        if power < -1 {
            return Err(PolyAlgError::Validation(format!(
                "term power {power} has a pole of order above one"
            )));
        }
        let target = match order {
            0 => &mut self.zeroth,
            1 => &mut self.first,
            _ => {
                return Err(PolyAlgError::Validation(format!(
                    "derivative order {order} exceeds one"
                )))
            }
        };
        target[row][col].add_term(power, c);
        Ok(())
    }

    pub fn with_premultiplier(mut self, p: Premultiplier) -> Self {
        self.premultiplier = p;
        self
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn premultiplier(&self) -> Premultiplier {
        self.premultiplier
    }

    /// Coefficient of d/dt in entry (row, col).
    pub fn first(&self, row: usize, col: usize) -> &Laurent {
        &self.first[row][col]
    }

    /// Multiplicative part of entry (row, col).
    pub fn zeroth(&self, row: usize, col: usize) -> &Laurent {
        &self.zeroth[row][col]
    }

    /// The radial Dirac operator in r at energy ε (B ≡ 0).
    ///
    /// Rows: f′ − (κ/r + μₙE)f + (M − ε − V + W)g and g′ + (κ/r + μₙE)g + (M + ε + V + W)f.
    pub fn dirac(instance: &ProblemInstance, epsilon: f64) -> Self {
        let p = &instance.params;
        let pot = &instance.potentials;
        let kappa = p.kappa.value();
        let mut op = Self::derivative(Variable::R);

        let mut diag = Laurent::term(-1, kappa);
        for (i, &g) in pot.gamma_poly.iter().enumerate() {
            diag.add_term(i as i32, p.mu_n * g);
        }
        op.zeroth[0][0] = diag.scale(-1.0);
        op.zeroth[1][1] = diag;

        let mut v = Laurent::term(-1, pot.alpha);
        for (i, &a) in pot.alpha_poly.iter().enumerate() {
            v.add_term(i as i32 + 1, a);
        }
        let mut w = Laurent::term(-1, pot.beta);
        for (i, &b) in pot.beta_poly.iter().enumerate() {
            w.add_term(i as i32 + 1, b);
        }
        op.zeroth[0][1] = Laurent::term(0, p.mass - epsilon).add(&v.scale(-1.0)).add(&w);
        op.zeroth[1][0] = Laurent::term(0, p.mass + epsilon).add(&v).add(&w);
        op
    }

    /// The same operator with its premultiplier folded into the coefficients.
    pub fn baked(&self) -> Result<RadialOperator, PolyAlgError> {
        let s = premultiplier_shift(self.variable, self.premultiplier)?;
        Ok(RadialOperator {
            variable: self.variable,
            premultiplier: Premultiplier::One,
            first: lmat_map(&self.first, |l| l.shift(s)),
            zeroth: lmat_map(&self.zeroth, |l| l.shift(s)),
        })
    }

    pub fn add(&self, other: &RadialOperator) -> Result<RadialOperator, PolyAlgError> {
        if self.variable != other.variable || self.premultiplier != other.premultiplier {
            return Err(PolyAlgError::Validation(
                "operators act in different variables or carry different premultipliers".into(),
            ));
        }
        let mut out = self.clone();
        for i in 0..2 {
            for j in 0..2 {
                out.first[i][j] = self.first[i][j].add(&other.first[i][j]);
                out.zeroth[i][j] = self.zeroth[i][j].add(&other.zeroth[i][j]);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> RadialOperator {
        RadialOperator {
            variable: self.variable,
            premultiplier: self.premultiplier,
            first: lmat_map(&self.first, |l| l.scale(s)),
            zeroth: lmat_map(&self.zeroth, |l| l.scale(s)),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.first
            .iter()
            .chain(&self.zeroth)
            .flatten()
            .fold(0.0, |m, l| m.max(l.max_abs()))
    }

    /// Largest coefficient difference after folding in premultipliers.
    pub fn max_abs_diff(&self, other: &RadialOperator) -> Result<f64, PolyAlgError> {
        let a = self.baked()?;
        let b = other.baked()?;
        if a.variable != b.variable {
            return Err(PolyAlgError::Validation("operators act in different variables".into()));
        }
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max(a.first[i][j].add(&b.first[i][j].scale(-1.0)).max_abs());
                m = m.max(a.zeroth[i][j].add(&b.zeroth[i][j].scale(-1.0)).max_abs());
            }
        }
        Ok(m)
    }

    /// Pointwise action on a function with values `v` and t-derivatives `dv` at t.
    pub fn eval_at(&self, t: f64, v: [f64; 2], dv: [f64; 2]) -> Result<[f64; 2], PolyAlgError> {
        let s = premultiplier_shift(self.variable, self.premultiplier)?;
        let pre = t.powi(s);
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..2 {
                *o += self.first[i][j].eval(t) * dv[j] + self.zeroth[i][j].eval(t) * v[j];
            }
            *o *= pre;
        }
        Ok(out)
    }

    /// Formal image of a polynomial spinor, multiplied by the premultiplier.
    pub fn apply(&self, psi: &PolySpinor) -> Result<PolySpinor, PolyAlgError> {
        let s = premultiplier_shift(self.variable, self.premultiplier)?;
        let scale = self.max_abs().max(f64::MIN_POSITIVE) * psi.max_abs().max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;
        let d = [
            Laurent::from_poly(&psi.upper.derivative()),
            Laurent::from_poly(&psi.lower.derivative()),
        ];
        let f = [Laurent::from_poly(&psi.upper), Laurent::from_poly(&psi.lower)];
        let mut rows = Vec::with_capacity(2);
        for i in 0..2 {
            let mut acc = Laurent::zero();
            for j in 0..2 {
                acc = acc.add(&self.first[i][j].mul(&d[j]));
                acc = acc.add(&self.zeroth[i][j].mul(&f[j]));
            }
            let acc = acc.shift(s);
            if let Some(k) = acc.min_power(tol).filter(|&k| k < 0) {
                return Err(PolyAlgError::Pole {
                    row: i,
                    power: k,
                    residue: acc.coeff(k),
                });
            }
            let top = acc.max_power(0.0).unwrap_or(-1).max(-1);
            rows.push(Poly::new((0..=top).map(|k| acc.coeff(k)).collect()));
        }
        let lower = rows.pop().unwrap_or_default();
        let upper = rows.pop().unwrap_or_default();
        Ok(PolySpinor::new(upper, lower))
    }

    /// Structural upper bound on the image degree of each row for inputs of the given degrees.
    fn image_degree_bounds(&self, degs: [i32; 2]) -> Result<[i32; 2], PolyAlgError> {
        let s = premultiplier_shift(self.variable, self.premultiplier)?;
        let mut out = [-1; 2];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, &dj) in degs.iter().enumerate() {
                if dj < 0 {
                    continue;
                }
                if let Some(k) = self.first[i][j].max_power(0.0) {
                    if dj >= 1 {
                        *o = (*o).max(dj - 1 + k + s);
                    }
                }
                if let Some(k) = self.zeroth[i][j].max_power(0.0) {
                    *o = (*o).max(dj + k + s);
                }
            }
        }
        Ok(out)
    }

    /// Matrix of the operator on the monomial basis of P(deg_upper) ⊕ P(deg_lower).
    ///
    /// A degree of −1 denotes the zero space. Columns list the upper monomials
    /// 1, t, …, t^deg_upper followed by the lower ones; rows list image degrees of the
    /// upper component and then of the lower one, including overflow degrees.
    pub fn matrix_rep(&self, deg_upper: i32, deg_lower: i32) -> Result<MatrixRep, PolyAlgError> {
        if deg_upper < -1 || deg_lower < -1 {
            return Err(PolyAlgError::Validation("degrees must be at least -1".into()));
        }
        let bounds = self.image_degree_bounds([deg_upper, deg_lower])?;
        let img_u = bounds[0].max(deg_upper);
        let img_l = bounds[1].max(deg_lower);
        let rows_u = (img_u + 1) as usize;
        let rows_l = (img_l + 1) as usize;
        let cols_u = (deg_upper + 1) as usize;
        let cols_l = (deg_lower + 1) as usize;
        let mut m = DMatrix::zeros(rows_u + rows_l, cols_u + cols_l);
        for col in 0..cols_u + cols_l {
            let psi = if col < cols_u {
                PolySpinor::new(Poly::monomial(col, 1.0), Poly::zero())
            } else {
                PolySpinor::new(Poly::zero(), Poly::monomial(col - cols_u, 1.0))
            };
            let img = self.apply(&psi)?;
            for (k, &c) in img.upper.coeffs().iter().enumerate() {
                if k < rows_u {
                    m[(k, col)] = c;
                }
            }
            for (k, &c) in img.lower.coeffs().iter().enumerate() {
                if k < rows_l {
                    m[(rows_u + k, col)] = c;
                }
            }
        }
        Ok(MatrixRep {
            matrix: m,
            deg_upper,
            deg_lower,
            rows_upper: rows_u,
        })
    }
}

/// Finite matrix of an operator on P(deg_upper) ⊕ P(deg_lower).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    pub matrix: DMatrix<f64>,
    pub deg_upper: i32,
    pub deg_lower: i32,
    pub rows_upper: usize,
}

impl MatrixRep {
    pub fn cols_upper(&self) -> usize {
        (self.deg_upper + 1) as usize
    }

    /// Rows whose image degree exceeds the input degree of the same component.
    pub fn overflow_rows(&self) -> Vec<usize> {
        let keep_u = (self.deg_upper + 1) as usize;
        let keep_l = (self.deg_lower + 1) as usize;
        let up = keep_u..self.rows_upper;
        let low = self.rows_upper + keep_l..self.matrix.nrows();
        up.chain(low).collect()
    }

    /// Largest entry magnitude over the overflow rows.
    pub fn overflow_norm(&self) -> f64 {
        self.overflow_rows()
            .into_iter()
            .flat_map(|r| self.matrix.row(r).iter().map(|c| c.abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    /// Rows of image degree within the input space.
    pub fn invariant_block(&self) -> DMatrix<f64> {
        let over = self.overflow_rows();
        let keep: Vec<usize> = (0..self.matrix.nrows()).filter(|r| !over.contains(r)).collect();
        self.matrix.select_rows(&keep)
    }

    pub fn scale(&self) -> f64 {
        self.matrix.amax()
    }

    /// The same representation with zero rows appended up to the given image-row counts.
    pub fn padded(&self, rows_upper: usize, rows_lower: usize) -> MatrixRep {
        let ru = rows_upper.max(self.rows_upper);
        let rl = rows_lower.max(self.matrix.nrows() - self.rows_upper);
        let mut m = DMatrix::zeros(ru + rl, self.matrix.ncols());
        let old_l = self.matrix.nrows() - self.rows_upper;
        m.view_mut((0, 0), (self.rows_upper, self.matrix.ncols()))
            .copy_from(&self.matrix.rows(0, self.rows_upper));
        m.view_mut((ru, 0), (old_l, self.matrix.ncols()))
            .copy_from(&self.matrix.rows(self.rows_upper, old_l));
        MatrixRep {
            matrix: m,
            deg_upper: self.deg_upper,
            deg_lower: self.deg_lower,
            rows_upper: ru,
        }
    }

    pub fn rows_lower(&self) -> usize {
        self.matrix.nrows() - self.rows_upper
    }

    pub fn spinor_from(&self, v: &DVector<f64>) -> PolySpinor {
        let cu = self.cols_upper();
        PolySpinor::new(
            Poly::new(v.rows(0, cu).iter().copied().collect()),
            Poly::new(v.rows(cu, v.len() - cu).iter().copied().collect()),
        )
    }
}
