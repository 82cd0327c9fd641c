//! Reaction networks and their mass-action systems.
//!
//! Species are indexed `0..n` internally; everything user-facing (display,
//! the text format, certificates) names them `X1..Xn`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("a network needs at least one species")]
    NoSpecies,
    #[error("species index {index} is out of range for {species_count} species")]
    SpeciesOutOfRange { index: usize, species_count: usize },
    #[error("reactant and product of `{0}` are identical")]
    TrivialReaction(String),
    #[error("reaction `{reaction}` appears more than once (positions {first} and {second})")]
    DuplicateReaction {
        reaction: String,
        first: usize,
        second: usize,
    },
    #[error("expected {expected} {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rate {index} is {value}; rates must be finite and strictly positive")]
    NonPositiveRate { index: usize, value: f64 },
    #[error(
        "concentration {index} is {value}; concentrations must be finite and strictly positive"
    )]
    NonPositiveConcentration { index: usize, value: f64 },
    #[error("network is not fully open: X{} lacks an inflow or an outflow", .0 + 1)]
    NotFullyOpen(usize),
    #[error("sequestration network needs m >= 1 and n >= 2 (got m = {m}, n = {n})")]
    InvalidSequestration { m: u32, n: usize },
}

/// A non-negative integer combination of species.
///
/// Zero coefficients are never stored, so the empty map is the zero complex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex {
    coeffs: BTreeMap<usize, u32>,
}

impl Complex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The complex `1·X_i`.
    pub fn species(i: usize) -> Self {
        Self::from_terms([(i, 1)])
    }

    /// Builds a complex from `(species, coefficient)` pairs. Repeated species
    /// are summed and zero coefficients dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (species, c) in terms {
            if c > 0 {
                *coeffs.entry(species).or_insert(0) += c;
            }
        }
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, species: usize) -> u32 {
        self.coeffs.get(&species).copied().unwrap_or(0)
    }

    /// Non-zero `(species, coefficient)` pairs in increasing species order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.coeffs.iter().map(|(&s, &c)| (s, c))
    }

    /// `Some(i)` if the complex is exactly `1·X_i`.
    pub fn single_species(&self) -> Option<usize> {
        match self.coeffs.iter().next() {
            Some((&s, &1)) if self.coeffs.len() == 1 => Some(s),
            _ => None,
        }
    }

    pub fn max_species(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    /// Dense coefficient vector of length `n`.
    pub fn to_vec(&self, n: usize) -> Vec<i64> {
        let mut v = vec![0; n];
        for (s, c) in self.terms() {
            v[s] = i64::from(c);
        }
        v
    }

    /// `<y, v>`.
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.terms().map(|(s, c)| f64::from(c) * v[s]).sum()
    }

    /// `x^y = prod_i x_i^{y_i}`; the zero complex gives 1.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.terms().map(|(s, c)| int_pow(x[s], c)).product()
    }

    /// Partial derivative of the monomial with respect to `x_j`.
    fn monomial_derivative(&self, x: &[f64], j: usize) -> f64 {
        let cj = self.coefficient(j);
        if cj == 0 {
            return 0.0;
        }
        self.terms()
            .map(|(s, c)| {
                if s == j {
                    f64::from(c) * int_pow(x[s], c - 1)
                } else {
                    int_pow(x[s], c)
                }
            })
            .product()
    }
}

fn int_pow(base: f64, exp: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (s, c)) in self.terms().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if c != 1 {
                write!(f, "{c} ")?;
            }
            write!(f, "X{}", s + 1)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReactionKind {
    Internal,
    /// `X_i -> 0`
    Outflow,
    /// `0 -> X_i`
    Inflow,
}

/// A reaction `y -> y'`. Its kind is derived from the two complexes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Reaction {
    reactant: Complex,
    product: Complex,
    kind: ReactionKind,
}

impl Reaction {
    pub fn new(reactant: Complex, product: Complex) -> Result<Self, ModelError> {
        if reactant == product {
            return Err(ModelError::TrivialReaction(format!(
                "{reactant} -> {product}"
            )));
        }
        let kind = if product.is_zero() && reactant.single_species().is_some() {
            ReactionKind::Outflow
        } else if reactant.is_zero() && product.single_species().is_some() {
            ReactionKind::Inflow
        } else {
            ReactionKind::Internal
        };
        Ok(Self {
            reactant,
            product,
            kind,
        })
    }

    pub fn outflow(species: usize) -> Self {
        Self {
            reactant: Complex::species(species),
            product: Complex::zero(),
            kind: ReactionKind::Outflow,
        }
    }

    pub fn inflow(species: usize) -> Self {
        Self {
            reactant: Complex::zero(),
            product: Complex::species(species),
            kind: ReactionKind::Inflow,
        }
    }

    pub fn reactant(&self) -> &Complex {
        &self.reactant
    }

    pub fn product(&self) -> &Complex {
        &self.product
    }

    pub fn kind(&self) -> ReactionKind {
        self.kind
    }

    /// The species a flow reaction moves in or out of.
    pub fn flow_species(&self) -> Option<usize> {
        match self.kind {
            ReactionKind::Outflow => self.reactant.single_species(),
            ReactionKind::Inflow => self.product.single_species(),
            ReactionKind::Internal => None,
        }
    }

    /// Reaction vector `y' - y`.
    pub fn reaction_vector(&self, n: usize) -> Vec<i64> {
        let mut v = self.product.to_vec(n);
        for (s, c) in self.reactant.terms() {
            v[s] -= i64::from(c);
        }
        v
    }

    /// `y - y'`, the direction that appears in `T_eta` and the hypotheses.
    pub fn loss_vector(&self, n: usize) -> Vec<i64> {
        self.reaction_vector(n).into_iter().map(|c| -c).collect()
    }

    fn max_species(&self) -> Option<usize> {
        self.reactant.max_species().max(self.product.max_species())
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.reactant, self.product)
    }
}

/// Positive rate constants, one per reaction in network order.
#[derive(Clone, Debug, PartialEq)]
pub struct RateAssignment(Vec<f64>);

impl RateAssignment {
    pub fn new(rates: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((index, &value)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(ModelError::NonPositiveRate { index, value });
        }
        Ok(Self(rates))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for RateAssignment {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Strictly positive species concentrations.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationVector(Vec<f64>);

impl ConcentrationVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x > 0.0))
        {
            return Err(ModelError::NonPositiveConcentration { index, value });
        }
        Ok(Self(values))
    }

    /// The all-ones vector `(1, ..., 1)`.
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ConcentrationVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A chemical reaction network: species `X1..Xn` and an ordered reaction list.
///
/// The reaction order is part of the network's identity; rate vectors and
/// certificates index into it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    species_count: usize,
    reactions: Vec<Reaction>,
}

impl Network {
    pub fn new(species_count: usize, reactions: Vec<Reaction>) -> Result<Self, ModelError> {
        if species_count == 0 {
            return Err(ModelError::NoSpecies);
        }
        for r in &reactions {
            if let Some(index) = r.max_species().filter(|&s| s >= species_count) {
                return Err(ModelError::SpeciesOutOfRange {
                    index,
                    species_count,
                });
            }
        }
        let mut seen = HashMap::new();
        for (k, r) in reactions.iter().enumerate() {
            if let Some(first) = seen.insert(r, k) {
                return Err(ModelError::DuplicateReaction {
                    reaction: r.to_string(),
                    first,
                    second: k,
                });
            }
        }
        Ok(Self {
            species_count,
            reactions,
        })
    }

    /// The fully open sequestration network: `X1 + X2 -> 0, ..., X(n-1) + Xn -> 0,
    /// X1 -> m Xn`, then the `n` outflows, then the `n` inflows.
    pub fn sequestration(m: u32, n: usize) -> Result<Self, ModelError> {
        if m < 1 || n < 2 {
            return Err(ModelError::InvalidSequestration { m, n });
        }
        let mut reactions: Vec<Reaction> = (0..n - 1)
            .map(|i| Reaction::new(Complex::from_terms([(i, 1), (i + 1, 1)]), Complex::zero()))
            .collect::<Result<_, _>>()?;
        reactions.push(Reaction::new(
            Complex::species(0),
            Complex::from_terms([(n - 1, m)]),
        )?);
        Self::new(n, reactions).map(|net| net.fully_open_extension())
    }

    pub fn species_count(&self) -> usize {
        self.species_count
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    pub fn reaction(&self, k: usize) -> &Reaction {
        &self.reactions[k]
    }

    /// Where each reaction of the fully open extension comes from: `Some(k)`
    /// for reaction `k` of `self`, `None` for an added flow.
    pub(crate) fn fully_open_layout(&self) -> (Vec<Reaction>, Vec<Option<usize>>) {
        let mut out = Vec::with_capacity(self.reactions.len() + 2 * self.species_count);
        let mut source = Vec::with_capacity(out.capacity());
        for (k, r) in self.reactions.iter().enumerate() {
            if r.kind() == ReactionKind::Internal {
                out.push(r.clone());
                source.push(Some(k));
            }
        }
        for i in 0..self.species_count {
            out.push(Reaction::outflow(i));
            source.push(self.outflow_index(i));
        }
        for i in 0..self.species_count {
            out.push(Reaction::inflow(i));
            source.push(self.inflow_index(i));
        }
        (out, source)
    }

    /// Adds `Xi -> 0` and `0 -> Xi` for every species, in canonical order:
    /// internal reactions, then the outflows `X1 -> 0 .. Xn -> 0`, then the
    /// inflows. Flows already present are moved into place, not duplicated.
    pub fn fully_open_extension(&self) -> Network {
        let (reactions, _) = self.fully_open_layout();
        Network {
            species_count: self.species_count,
            reactions,
        }
    }

    pub fn outflow_index(&self, species: usize) -> Option<usize> {
        self.reactions
            .iter()
            .position(|r| r.kind() == ReactionKind::Outflow && r.flow_species() == Some(species))
    }

    pub fn inflow_index(&self, species: usize) -> Option<usize> {
        self.reactions
            .iter()
            .position(|r| r.kind() == ReactionKind::Inflow && r.flow_species() == Some(species))
    }

    /// Every species has both an inflow and an outflow.
    pub fn is_fully_open(&self) -> bool {
        self.first_missing_flow().is_none()
    }

    pub(crate) fn first_missing_flow(&self) -> Option<usize> {
        (0..self.species_count)
            .find(|&i| self.outflow_index(i).is_none() || self.inflow_index(i).is_none())
    }

    /// Indices of internal and outflow reactions, in network order. `EtaVector`
    /// entries follow this order.
    pub fn non_inflow_indices(&self) -> Vec<usize> {
        self.reactions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.kind() != ReactionKind::Inflow)
            .map(|(k, _)| k)
            .collect()
    }

    /// Species x reactions matrix whose column `k` is `y'_k - y_k`.
    pub fn stoichiometric_matrix(&self) -> DMatrix<i64> {
        let n = self.species_count;
        let mut gamma = DMatrix::zeros(n, self.reactions.len());
        for (k, r) in self.reactions.iter().enumerate() {
            for (i, v) in r.reaction_vector(n).into_iter().enumerate() {
                gamma[(i, k)] = v;
            }
        }
        gamma
    }

    fn check_dims(&self, rates: &[f64], x: &[f64]) -> Result<(), ModelError> {
        if rates.len() != self.reactions.len() {
            return Err(ModelError::DimensionMismatch {
                what: "rates",
                expected: self.reactions.len(),
                got: rates.len(),
            });
        }
        if x.len() != self.species_count {
            return Err(ModelError::DimensionMismatch {
                what: "concentrations",
                expected: self.species_count,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The reactant vector `R(x)`: `r_k x^{y_k}` for each reaction.
    pub fn reactant_vector(
        &self,
        rates: &RateAssignment,
        x: &[f64],
    ) -> Result<Vec<f64>, ModelError> {
        self.check_dims(rates, x)?;
        Ok(self
            .reactions
            .iter()
            .zip(rates.iter())
            .map(|(r, &k)| k * r.reactant().monomial(x))
            .collect())
    }

    /// `dx/dt = Gamma R(x)`.
    pub fn ode_rhs(&self, rates: &RateAssignment, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        let flux = self.reactant_vector(rates, x)?;
        let mut dx = vec![0.0; self.species_count];
        for (r, v) in self.reactions.iter().zip(flux) {
            for (s, c) in r.product().terms() {
                dx[s] += f64::from(c) * v;
            }
            for (s, c) in r.reactant().terms() {
                dx[s] -= f64::from(c) * v;
            }
        }
        Ok(dx)
    }

    /// Jacobian of `ode_rhs` with respect to `x`, from the monomial structure.
    pub fn jacobian(&self, rates: &RateAssignment, x: &[f64]) -> Result<DMatrix<f64>, ModelError> {
        self.check_dims(rates, x)?;
        Ok(self.jacobian_unchecked(|k| rates[k], x))
    }

    /// Jacobian with rates supplied per reaction index. Inflow rates are never
    /// requested since `0 -> X` contributes nothing.
    pub(crate) fn jacobian_unchecked(
        &self,
        rate: impl Fn(usize) -> f64,
        x: &[f64],
    ) -> DMatrix<f64> {
        let n = self.species_count;
        let mut jac = DMatrix::zeros(n, n);
        for (k, r) in self.reactions.iter().enumerate() {
            if r.reactant().is_zero() {
                continue;
            }
            let rk = rate(k);
            let v = r.reaction_vector(n);
            for (j, _) in r.reactant().terms() {
                let d = rk * r.reactant().monomial_derivative(x, j);
                for (i, &vi) in v.iter().enumerate() {
                    if vi != 0 {
                        jac[(i, j)] += vi as f64 * d;
                    }
                }
            }
        }
        jac
    }

    pub fn jacobian_determinant(
        &self,
        rates: &RateAssignment,
        x: &[f64],
    ) -> Result<f64, ModelError> {
        Ok(linalg::determinant(&self.jacobian(rates, x)?))
    }

    /// `|det df(x)| > tol * H` with `H` the Hadamard bound, both taken after
    /// scaling rows and columns by powers of two (see
    /// [`linalg::scaled_singularity_ratio`]), so the answer does not depend on
    /// the units of each species.
    ///
    /// Only meaningful for fully open networks, where the stoichiometric
    /// subspace is all of `R^n`.
    pub fn is_nondegenerate(
        &self,
        rates: &RateAssignment,
        x: &[f64],
        tol: f64,
    ) -> Result<bool, ModelError> {
        if let Some(i) = self.first_missing_flow() {
            return Err(ModelError::NotFullyOpen(i));
        }
        let jac = self.jacobian(rates, x)?;
        Ok(linalg::scaled_singularity_ratio(&jac) > tol)
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, r) in self.reactions.iter().enumerate() {
            writeln!(f, "{:>3}: {r}", k + 1)?;
        }
        Ok(())
    }
}
