//! Warehouse allocation instances and their QUBO encoding.
//!
//! Products `alpha` are placed on gravity shelves `m`. The cost being minimized
//! is `A * f_a + B * f_b + C * f_c` where
//!
//! * `f_a = sum_alpha (1 - sum_m x[alpha][m])^2` (every product placed exactly once),
//! * `f_b = sum_m sum_{alpha, beta} lambda[alpha][beta] x[alpha][m] x[beta][m]`
//!   (the sum is over ordered pairs, so a co-shelved pair costs `2 * lambda`),
//! * `f_c = sum_m (sum_alpha c[alpha] x[alpha][m] + slack_m - L_m)^2`
//!   where `slack_m = sum_l 2^l a[m][l]` fills the unused capacity of shelf `m`.
//!
//! [`FcForm::Literal`] keeps the alternative per-product form of the capacity
//! term, `sum_m sum_alpha (c[alpha] x[alpha][m] + slack_m - L_m)^2`, for comparison.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Self {
            a: 10.0,
            b: 0.5,
            c: 0.25,
        }
    }
}

/// A warehouse allocation problem.
///
/// The JSON form is `{"shelves": [..], "weights": [..], "lambda": [[..]], "penalties": {"A", "B", "C"}}`.
/// The diagonal of `lambda` is zeroed on construction and deserialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProblemInstance {
    shelf_capacities: Vec<u32>,
    product_weights: Vec<u32>,
    lambda: Vec<Vec<f64>>,
    penalties: Penalties,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    shelves: Vec<u32>,
    weights: Vec<u32>,
    lambda: Vec<Vec<f64>>,
    #[serde(default)]
    penalties: Penalties,
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Self::new(raw.shelves, raw.weights, raw.lambda, raw.penalties)
    }
}

impl From<ProblemInstance> for RawInstance {
    fn from(inst: ProblemInstance) -> Self {
        Self {
            shelves: inst.shelf_capacities,
            weights: inst.product_weights,
            lambda: inst.lambda,
            penalties: inst.penalties,
        }
    }
}

impl ProblemInstance {
    /// Builds an instance, rejecting only structural problems (empty lists,
    /// non-square `lambda`, non-finite values). Semantic checks live in
    /// [`ProblemInstance::validate`].
    pub fn new(
        shelf_capacities: Vec<u32>,
        product_weights: Vec<u32>,
        mut lambda: Vec<Vec<f64>>,
        penalties: Penalties,
    ) -> Result<Self> {
        if shelf_capacities.is_empty() {
            return Err(Error::InvalidInstance("no shelves".into()));
        }
        if product_weights.is_empty() {
            return Err(Error::InvalidInstance("no products".into()));
        }
        let p = product_weights.len();
        if lambda.len() != p || lambda.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidInstance(format!(
                "lambda must be {p}x{p} to match the product count"
            )));
        }
        if lambda.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance(
                "lambda has non-finite entries".into(),
            ));
        }
        let Penalties { a, b, c } = penalties;
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidInstance(
                "penalty weights must be finite".into(),
            ));
        }
        for (i, row) in lambda.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Ok(Self {
            shelf_capacities,
            product_weights,
            lambda,
            penalties,
        })
    }

    /// Unit weights and uniform capacity `capacity` on every shelf.
    pub fn uniform(
        shelves: usize,
        capacity: u32,
        lambda: Vec<Vec<f64>>,
        penalties: Penalties,
    ) -> Result<Self> {
        let products = lambda.len();
        Self::new(
            vec![capacity; shelves],
            vec![1; products],
            lambda,
            penalties,
        )
    }

    /// Three unit-weight products on two shelves of capacity two, with
    /// `A = 10`, `B = A / 20`, `C = B / 2`. Products 0 and 2 are the cheapest
    /// pair to co-shelve.
    pub fn three_products_two_shelves() -> Self {
        let lambda = vec![
            vec![0.0, 0.4, 0.2],
            vec![0.4, 0.0, 0.6],
            vec![0.2, 0.6, 0.0],
        ];
        Self::uniform(2, 2, lambda, Penalties::default()).expect("well-formed instance")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn num_shelves(&self) -> usize {
        self.shelf_capacities.len()
    }

    pub fn num_products(&self) -> usize {
        self.product_weights.len()
    }

    pub fn shelf_capacities(&self) -> &[u32] {
        &self.shelf_capacities
    }

    pub fn product_weights(&self) -> &[u32] {
        &self.product_weights
    }

    pub fn lambda(&self) -> &[Vec<f64>] {
        &self.lambda
    }

    pub fn penalties(&self) -> Penalties {
        self.penalties
    }

    pub fn with_penalties(mut self, penalties: Penalties) -> Self {
        self.penalties = penalties;
        self
    }

    pub fn validate(&self) -> ValidationReport {
        validate_instance(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, message: impl Into<String>) {
        self.issues.push(Issue {
            severity,
            message: message.into(),
        });
    }

    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    /// Converts the report into an error if it carries any error-level issue.
    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<_> = self.errors().map(|i| i.message.clone()).collect();
            Err(Error::InvalidInstance(msgs.join("; ")))
        }
    }
}

pub fn validate_instance(inst: &ProblemInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let p = inst.num_products();

    let asymmetric = (0..p).any(|i| (0..i).any(|j| inst.lambda[i][j] != inst.lambda[j][i]));
    if asymmetric {
        report.push(Severity::Error, "lambda not symmetric");
    }
    let out_of_range = inst
        .lambda
        .iter()
        .flatten()
        .any(|&v| !(0.0..1.0).contains(&v));
    if out_of_range {
        report.push(Severity::Error, "lambda entries must lie in [0, 1)");
    }
    let zero_off_diag = (0..p).any(|i| (0..p).any(|j| i != j && inst.lambda[i][j] == 0.0));
    if zero_off_diag {
        report.push(
            Severity::Warning,
            "lambda has zero off-diagonal entries (expected 0 < lambda < 1)",
        );
    }

    if let Some(m) = inst.shelf_capacities.iter().position(|&l| l == 0) {
        report.push(Severity::Error, format!("shelf {m} has zero capacity"));
    }
    if let Some(a) = inst.product_weights.iter().position(|&c| c == 0) {
        report.push(Severity::Error, format!("product {a} has zero weight"));
    }
    let total_weight: u64 = inst.product_weights.iter().map(|&c| c as u64).sum();
    let total_capacity: u64 = inst.shelf_capacities.iter().map(|&l| l as u64).sum();
    if total_weight > total_capacity {
        report.push(Severity::Error, "total weight exceeds total capacity");
    }

    let Penalties { a, b, c } = inst.penalties;
    if a <= 0.0 || b <= 0.0 || c <= 0.0 {
        report.push(Severity::Error, "penalty weights must be positive");
    }
    if !(a > b && a > c) {
        report.push(Severity::Warning, "A should exceed both B and C");
    }
    if c >= b {
        report.push(Severity::Warning, "C should be smaller than B");
    }
    report
}

/// Which form of the capacity penalty to encode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FcForm {
    /// `sum_m (load_m + slack_m - L_m)^2`.
    #[default]
    Shelf,
    /// `sum_m sum_alpha (c_alpha x + slack_m - L_m)^2`.
    Literal,
}

/// Variable indices. Work variable `x[alpha][m]` sits at `m + alpha * M`;
/// slack bit `l` of shelf `m` sits at `M * (P + l) + m` when all shelves have
/// the same number of slack bits. With heterogeneous capacities the slack
/// register is still laid out level by level, skipping shelves that have no
/// bit at that level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    shelves: usize,
    products: usize,
    slack_bits: Vec<usize>,
    slack_index: Vec<Vec<usize>>,
    n_total: usize,
}

/// Number of binary slack bits for a shelf of capacity `capacity`:
/// `ceil(log2(L + 1))`, which equals `1 + log2 L` for powers of two.
pub fn slack_bits_for(capacity: u32) -> usize {
    (u32::BITS - capacity.leading_zeros()) as usize
}

impl VariableLayout {
    pub fn new(capacities: &[u32], products: usize) -> Result<Self> {
        if let Some(shelf) = capacities.iter().position(|&l| l == 0) {
            return Err(Error::ZeroCapacity { shelf });
        }
        let shelves = capacities.len();
        let slack_bits: Vec<usize> = capacities.iter().map(|&l| slack_bits_for(l)).collect();
        let max_bits = slack_bits.iter().copied().max().unwrap_or(0);
        let mut slack_index = vec![Vec::new(); shelves];
        let mut next = shelves * products;
        for level in 0..max_bits {
            for (m, &bits) in slack_bits.iter().enumerate() {
                if level < bits {
                    slack_index[m].push(next);
                    next += 1;
                }
            }
        }
        Ok(Self {
            shelves,
            products,
            slack_bits,
            slack_index,
            n_total: next,
        })
    }

    pub fn n_work(&self) -> usize {
        self.shelves * self.products
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn shelves(&self) -> usize {
        self.shelves
    }

    pub fn products(&self) -> usize {
        self.products
    }

    pub fn slack_bits(&self, shelf: usize) -> usize {
        self.slack_bits[shelf]
    }

    pub fn work_index(&self, product: usize, shelf: usize) -> usize {
        debug_assert!(product < self.products && shelf < self.shelves);
        shelf + product * self.shelves
    }

    pub fn slack_index(&self, shelf: usize, level: usize) -> usize {
        self.slack_index[shelf][level]
    }

    /// Value of the binary slack register of `shelf`.
    pub fn slack_value(&self, bits: &Bitstring, shelf: usize) -> u64 {
        self.slack_index[shelf]
            .iter()
            .enumerate()
            .map(|(l, &q)| (bits.get(q) as u64) << l)
            .sum()
    }

    /// Encodes an assignment (`shelf_of[alpha]`) plus slack register values.
    pub fn encode(&self, shelf_of: &[Option<usize>], slacks: &[u64]) -> Result<Bitstring> {
        if shelf_of.len() != self.products {
            return Err(Error::LengthMismatch {
                expected: self.products,
                got: shelf_of.len(),
            });
        }
        if slacks.len() != self.shelves {
            return Err(Error::LengthMismatch {
                expected: self.shelves,
                got: slacks.len(),
            });
        }
        let mut bits = Bitstring::zeros(self.n_total);
        for (alpha, shelf) in shelf_of.iter().enumerate() {
            if let Some(m) = *shelf {
                if m >= self.shelves {
                    return Err(Error::InvalidInstance(format!("shelf {m} out of range")));
                }
                bits.set(self.work_index(alpha, m), true);
            }
        }
        for (m, &value) in slacks.iter().enumerate() {
            let width = self.slack_bits[m];
            if width < 64 && value >> width != 0 {
                return Err(Error::InvalidInstance(format!(
                    "slack {value} does not fit in {width} bits"
                )));
            }
            for (l, &q) in self.slack_index[m].iter().enumerate() {
                bits.set(q, (value >> l) & 1 == 1);
            }
        }
        Ok(bits)
    }
}

pub fn build_layout(inst: &ProblemInstance) -> Result<VariableLayout> {
    VariableLayout::new(&inst.shelf_capacities, inst.num_products())
}

/// Quadratic pseudo-boolean function `constant + sum_i linear[i] x_i + sum_{i<j} quadratic[(i,j)] x_i x_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    pub n: usize,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub layout: Option<VariableLayout>,
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            quadratic: BTreeMap::new(),
            linear: vec![0.0; n],
            constant: 0.0,
            layout: None,
        }
    }

    pub fn add_linear(&mut self, i: usize, value: f64) {
        self.linear[i] += value;
    }

    /// Adds `value * x_i * x_j`; `i == j` folds into the linear term.
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => self.linear[i] += value,
            std::cmp::Ordering::Less => *self.quadratic.entry((i, j)).or_insert(0.0) += value,
            std::cmp::Ordering::Greater => *self.quadratic.entry((j, i)).or_insert(0.0) += value,
        }
    }

    /// Adds `weight * (offset + sum_k coef_k x_{i_k})^2` using `x^2 = x`.
    pub fn add_squared_linear(&mut self, weight: f64, terms: &[(usize, f64)], offset: f64) {
        self.constant += weight * offset * offset;
        for (k, &(i, a)) in terms.iter().enumerate() {
            self.add_linear(i, weight * (a * a + 2.0 * offset * a));
            for &(j, b) in &terms[k + 1..] {
                self.add_quadratic(i, j, 2.0 * weight * a * b);
            }
        }
    }

    pub fn energy(&self, bits: &Bitstring) -> Result<f64> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        Ok(self.energy_unchecked(bits.as_slice()))
    }

    fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let mut e = self.constant;
        for (i, &v) in self.linear.iter().enumerate() {
            if x[i] {
                e += v;
            }
        }
        for (&(i, j), &v) in &self.quadratic {
            if x[i] && x[j] {
                e += v;
            }
        }
        e
    }

    /// Energy of the assignment `bit i of index -> x_i`.
    pub fn energy_of_index(&self, index: u64) -> f64 {
        let mut e = self.constant;
        for (i, &v) in self.linear.iter().enumerate() {
            if (index >> i) & 1 == 1 {
                e += v;
            }
        }
        for (&(i, j), &v) in &self.quadratic {
            if (index >> i) & 1 == 1 && (index >> j) & 1 == 1 {
                e += v;
            }
        }
        e
    }
}

pub fn qubo_energy(model: &QuboModel, bits: &Bitstring) -> Result<f64> {
    model.energy(bits)
}

pub fn build_qubo(inst: &ProblemInstance) -> Result<QuboModel> {
    build_qubo_with(inst, FcForm::Shelf)
}

pub fn build_qubo_with(inst: &ProblemInstance, form: FcForm) -> Result<QuboModel> {
    inst.validate().into_result()?;
    let layout = build_layout(inst)?;
    let (shelves, products) = (inst.num_shelves(), inst.num_products());
    let Penalties { a, b, c } = inst.penalties;
    let mut q = QuboModel::new(layout.n_total());

    for alpha in 0..products {
        let terms: Vec<_> = (0..shelves)
            .map(|m| (layout.work_index(alpha, m), -1.0))
            .collect();
        q.add_squared_linear(a, &terms, 1.0);
    }

    for m in 0..shelves {
        for alpha in 0..products {
            for beta in 0..products {
                let cost = inst.lambda[alpha][beta];
                if cost != 0.0 {
                    q.add_quadratic(
                        layout.work_index(alpha, m),
                        layout.work_index(beta, m),
                        b * cost,
                    );
                }
            }
        }
    }

    for m in 0..shelves {
        let slack: Vec<_> = (0..layout.slack_bits(m))
            .map(|l| (layout.slack_index(m, l), (1u64 << l) as f64))
            .collect();
        let capacity = -(inst.shelf_capacities[m] as f64);
        match form {
            FcForm::Shelf => {
                let mut terms: Vec<_> = (0..products)
                    .map(|alpha| {
                        (
                            layout.work_index(alpha, m),
                            inst.product_weights[alpha] as f64,
                        )
                    })
                    .collect();
                terms.extend_from_slice(&slack);
                q.add_squared_linear(c, &terms, capacity);
            }
            FcForm::Literal => {
                for alpha in 0..products {
                    let mut terms = vec![(
                        layout.work_index(alpha, m),
                        inst.product_weights[alpha] as f64,
                    )];
                    terms.extend_from_slice(&slack);
                    q.add_squared_linear(c, &terms, capacity);
                }
            }
        }
    }

    q.layout = Some(layout);
    Ok(q)
}

/// Unweighted penalty terms evaluated straight from their definitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub f_a: f64,
    pub f_b: f64,
    pub f_c: f64,
}

impl CostBreakdown {
    pub fn evaluate(
        inst: &ProblemInstance,
        layout: &VariableLayout,
        bits: &Bitstring,
        form: FcForm,
    ) -> Result<Self> {
        if bits.len() != layout.n_total() {
            return Err(Error::LengthMismatch {
                expected: layout.n_total(),
                got: bits.len(),
            });
        }
        let (shelves, products) = (inst.num_shelves(), inst.num_products());
        let x = |alpha: usize, m: usize| bits.get(layout.work_index(alpha, m)) as u8 as f64;

        let f_a = (0..products)
            .map(|alpha| {
                let placed: f64 = (0..shelves).map(|m| x(alpha, m)).sum();
                (1.0 - placed).powi(2)
            })
            .sum();

        let mut f_b = 0.0;
        for m in 0..shelves {
            for alpha in 0..products {
                for beta in 0..products {
                    f_b += inst.lambda[alpha][beta] * x(alpha, m) * x(beta, m);
                }
            }
        }

        let mut f_c = 0.0;
        for m in 0..shelves {
            let slack = layout.slack_value(bits, m) as f64;
            let capacity = inst.shelf_capacities[m] as f64;
            match form {
                FcForm::Shelf => {
                    let load: f64 = (0..products)
                        .map(|alpha| inst.product_weights[alpha] as f64 * x(alpha, m))
                        .sum();
                    f_c += (load + slack - capacity).powi(2);
                }
                FcForm::Literal => {
                    for alpha in 0..products {
                        let w = inst.product_weights[alpha] as f64 * x(alpha, m);
                        f_c += (w + slack - capacity).powi(2);
                    }
                }
            }
        }
        Ok(Self { f_a, f_b, f_c })
    }

    pub fn total(&self, penalties: Penalties) -> f64 {
        penalties.a * self.f_a + penalties.b * self.f_b + penalties.c * self.f_c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShelfReport {
    pub products: Vec<usize>,
    pub load: u64,
    pub slack: u64,
    pub capacity: u32,
    /// `load + slack == capacity`.
    pub balanced: bool,
}

/// Decoded assignment. Products and shelves are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub shelves: Vec<ShelfReport>,
    pub unassigned: Vec<usize>,
    pub multiply_assigned: Vec<usize>,
    pub feasible: bool,
}

impl AllocationReport {
    /// `shelf_of[alpha]` for products placed on exactly one shelf.
    pub fn shelf_of(&self, products: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; products];
        for (m, shelf) in self.shelves.iter().enumerate() {
            for &alpha in &shelf.products {
                if !self.multiply_assigned.contains(&alpha) {
                    out[alpha] = Some(m);
                }
            }
        }
        out
    }

    pub fn slacks(&self) -> Vec<u64> {
        self.shelves.iter().map(|s| s.slack).collect()
    }
}

impl fmt::Display for AllocationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, shelf) in self.shelves.iter().enumerate() {
            writeln!(
                f,
                "shelf {m}: products {:?}, load {}/{}, slack {}",
                shelf.products, shelf.load, shelf.capacity, shelf.slack
            )?;
        }
        if !self.unassigned.is_empty() {
            writeln!(f, "unassigned: {:?}", self.unassigned)?;
        }
        if !self.multiply_assigned.is_empty() {
            writeln!(f, "multiply assigned: {:?}", self.multiply_assigned)?;
        }
        write!(f, "feasible: {}", self.feasible)
    }
}

pub fn decode_assignment(
    inst: &ProblemInstance,
    layout: &VariableLayout,
    bits: &Bitstring,
) -> Result<AllocationReport> {
    if bits.len() != layout.n_total() {
        return Err(Error::LengthMismatch {
            expected: layout.n_total(),
            got: bits.len(),
        });
    }
    let (shelves, products) = (layout.shelves(), layout.products());
    let mut placements = vec![0usize; products];
    let mut reports = Vec::with_capacity(shelves);
    for m in 0..shelves {
        let on_shelf: Vec<usize> = (0..products)
            .filter(|&alpha| bits.get(layout.work_index(alpha, m)))
            .collect();
        for &alpha in &on_shelf {
            placements[alpha] += 1;
        }
        let load = on_shelf
            .iter()
            .map(|&alpha| inst.product_weights[alpha] as u64)
            .sum();
        let slack = layout.slack_value(bits, m);
        let capacity = inst.shelf_capacities[m];
        reports.push(ShelfReport {
            products: on_shelf,
            load,
            slack,
            capacity,
            balanced: load + slack == capacity as u64,
        });
    }
    let unassigned: Vec<_> = (0..products).filter(|&a| placements[a] == 0).collect();
    let multiply_assigned: Vec<_> = (0..products).filter(|&a| placements[a] > 1).collect();
    let feasible =
        unassigned.is_empty() && multiply_assigned.is_empty() && reports.iter().all(|s| s.balanced);
    Ok(AllocationReport {
        shelves: reports,
        unassigned,
        multiply_assigned,
        feasible,
    })
}
