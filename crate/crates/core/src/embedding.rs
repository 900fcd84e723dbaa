//! Enlarged-space encoding of a scalar wavefunction.
//!
//! The spinor `Ψ = (ψᵉ, ψᵒ)` stores the half-sum and half-difference of the
//! wavefunction in inertial and Rindler coordinates. The inertial field is
//! recovered as `(1, 1)Ψ` and the Rindler field as `(1, 1)σzΨ`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimum number of samples in any grid.
pub const MIN_GRID_POINTS: usize = 8;

/// Uniform sampling of `[x_min, x_max]` with `n` points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(Error::Validation(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Validation(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Validation("fields live on different grids".into()))
        }
    }
}

/// Complex scalar field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            values: grid.points().map(f).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `Σ conj(self)·other·dx`.
    pub fn inner(&self, other: &ScalarField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(inner_raw(&self.values, &other.values, self.grid.dx()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn inner_raw(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<Complex64>() * dx
}

/// The enlarged-space state `Ψ = (ψᵉ, ψᵒ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnlargedSpinorField {
    pub grid: Grid,
    pub even: Vec<Complex64>,
    pub odd: Vec<Complex64>,
}

impl EnlargedSpinorField {
    pub fn new(grid: Grid, even: Vec<Complex64>, odd: Vec<Complex64>) -> Result<Self> {
        if even.len() != grid.len() || odd.len() != grid.len() {
            return Err(Error::Validation("spinor components must match the grid".into()));
        }
        Ok(Self { grid, even, odd })
    }

    /// Assemble from the inertial and Rindler fields: `ψᵉ = (ψ + ψ')/2`, `ψᵒ = (ψ − ψ')/2`.
    pub fn from_frames(inertial: &ScalarField, rindler: &ScalarField) -> Result<Self> {
        inertial.grid.ensure_same(&rindler.grid)?;
        let (even, odd) = inertial
            .values
            .iter()
            .zip(&rindler.values)
            .map(|(p, q)| ((p + q) * 0.5, (p - q) * 0.5))
            .unzip();
        Ok(Self {
            grid: inertial.grid,
            even,
            odd,
        })
    }

    pub fn even_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.even.clone(),
        }
    }

    pub fn odd_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.odd.clone(),
        }
    }

    /// Physical `σz` gate on the enlarged space.
    pub fn apply_sigma_z(&self) -> Self {
        Self {
            grid: self.grid,
            even: self.even.clone(),
            odd: self.odd.iter().map(|z| -z).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.even
            .iter()
            .chain(&self.odd)
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn norm_even(&self) -> f64 {
        self.even_field().norm()
    }

    pub fn norm_odd(&self) -> f64 {
        self.odd_field().norm()
    }
}

pub fn embed_initial(psi0: &ScalarField) -> Result<EnlargedSpinorField> {
    if !psi0.is_finite() {
        return Err(Error::Validation("initial wavefunction has non-finite samples".into()));
    }
    // at t = 0 both frames agree, so the odd part vanishes
    Ok(EnlargedSpinorField {
        grid: psi0.grid,
        even: psi0.values.clone(),
        odd: vec![Complex64::new(0.0, 0.0); psi0.grid.len()],
    })
}

pub fn extract_inertial(psi: &EnlargedSpinorField) -> ScalarField {
    ScalarField {
        grid: psi.grid,
        values: psi.even.iter().zip(&psi.odd).map(|(e, o)| e + o).collect(),
    }
}

pub fn extract_rindler(psi: &EnlargedSpinorField) -> ScalarField {
    ScalarField {
        grid: psi.grid,
        values: psi.even.iter().zip(&psi.odd).map(|(e, o)| e - o).collect(),
    }
}

/// Single-particle observable acting on grid fields.
#[derive(Debug, Clone, PartialEq)]
pub enum GridObservable {
    Identity,
    Position,
    /// `−i ∂x` with a fourth-order central difference and zero extension
    /// beyond the grid, which keeps the matrix Hermitian.
    Momentum,
    /// Projector onto `lo ≤ x ≤ hi`.
    Window {
        lo: f64,
        hi: f64,
    },
    /// Arbitrary real diagonal.
    Diagonal(Vec<f64>),
}

impl GridObservable {
    pub fn apply(&self, grid: &Grid, values: &[Complex64]) -> Result<Vec<Complex64>> {
        if values.len() != grid.len() {
            return Err(Error::Validation(
                "observable applied to a field of wrong length".into(),
            ));
        }
        let out = match self {
            GridObservable::Identity => values.to_vec(),
            GridObservable::Position => values.iter().enumerate().map(|(i, z)| z * grid.x(i)).collect(),
            GridObservable::Window { lo, hi } => values
                .iter()
                .enumerate()
                .map(|(i, z)| {
                    let x = grid.x(i);
                    if x >= *lo && x <= *hi {
                        *z
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect(),
            GridObservable::Diagonal(d) => {
                if d.len() != grid.len() {
                    return Err(Error::Validation("diagonal observable has wrong length".into()));
                }
                values.iter().zip(d).map(|(z, w)| z * *w).collect()
            }
            GridObservable::Momentum => {
                let n = values.len() as isize;
                let at = |i: isize| {
                    if i < 0 || i >= n {
                        Complex64::new(0.0, 0.0)
                    } else {
                        values[i as usize]
                    }
                };
                let scale = Complex64::new(0.0, -1.0 / (12.0 * grid.dx()));
                (0..n)
                    .map(|i| scale * (at(i - 2) - at(i - 1) * 8.0 + at(i + 1) * 8.0 - at(i + 2)))
                    .collect()
            }
        };
        Ok(out)
    }
}

/// `⟨Ψ| M ⊗ O |Ψ⟩` for a 2×2 matrix `M` acting on the (even, odd) index.
fn spinor_bilinear(psi: &EnlargedSpinorField, m: [[Complex64; 2]; 2], o: &GridObservable) -> Result<Complex64> {
    let components = [&psi.even, &psi.odd];
    let applied = [o.apply(&psi.grid, &psi.even)?, o.apply(&psi.grid, &psi.odd)?];
    let dx = psi.grid.dx();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, left) in components.iter().enumerate() {
        for (j, right) in applied.iter().enumerate() {
            if m[i][j] != Complex64::new(0.0, 0.0) {
                total += m[i][j] * inner_raw(left, right, dx);
            }
        }
    }
    Ok(total)
}

pub(crate) mod pauli {
    use num_complex::Complex64;

    pub type Mat = [[Complex64; 2]; 2];

    const fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub const I: Mat = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    pub const X: Mat = [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
    pub const Y: Mat = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
    pub const Z: Mat = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];

    pub fn combine(a: Complex64, p: &Mat, b: Complex64, q: &Mat) -> Mat {
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a * p[i][j] + b * q[i][j];
            }
        }
        out
    }
}

/// `⟨Ψ|(I + σx) ⊗ O|Ψ⟩ = ⟨ψ|O|ψ⟩` for the inertial wavefunction.
pub fn expectation_inertial(psi: &EnlargedSpinorField, o: &GridObservable) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    spinor_bilinear(psi, pauli::combine(one, &pauli::I, one, &pauli::X), o)
}

/// `⟨Ψ|(I − σx) ⊗ O|Ψ⟩ = ⟨ψ'|O|ψ'⟩` for the Rindler wavefunction.
pub fn expectation_rindler(psi: &EnlargedSpinorField, o: &GridObservable) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    spinor_bilinear(psi, pauli::combine(one, &pauli::I, -one, &pauli::X), o)
}

/// `⟨Ψ|(σz − iσy) ⊗ O|Ψ⟩ = ⟨ψ|O|ψ'⟩`, the inertial–Rindler cross term.
pub fn correlation(psi: &EnlargedSpinorField, o: &GridObservable) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    spinor_bilinear(
        psi,
        pauli::combine(one, &pauli::Z, Complex64::new(0.0, -1.0), &pauli::Y),
        o,
    )
}
