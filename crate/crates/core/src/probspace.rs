//! Finite probability spaces and the information-theoretic primitives the
//! rest of the crate is built on.
//!
//! Every quantity here lives on small finite alphabets: distributions are
//! mass vectors, channels (quantizers) are row-stochastic matrices, and
//! deterministic maps are lookup tables. Rates are measured in bits.
//!
//! Alphabets are compared by size; labels are for display only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alphabet accepted by [`Alphabet::new`].
pub const MAX_ALPHABET: usize = 64;

/// Tolerance on total mass when a distribution or channel is constructed
/// from user-supplied numbers.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Tolerance on total mass for distributions and channels produced by
/// arithmetic inside the crate.
pub const ARITHMETIC_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Alphabet("size must be at least 1".into()));
        }
        if size > MAX_ALPHABET {
            return Err(Error::Alphabet(format!(
                "size {size} exceeds the limit of {MAX_ALPHABET} symbols"
            )));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut alphabet = Self::new(labels.len())?;
        let mut seen = std::collections::BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::Alphabet(format!("duplicate label {label:?}")));
            }
        }
        alphabet.labels = Some(labels);
        Ok(alphabet)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(labels) => labels[index].clone(),
            None => index.to_string(),
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.size {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                size: self.size,
            })
        }
    }
}

pub(crate) fn ensure_same(context: &'static str, expected: &Alphabet, found: &Alphabet) -> Result<()> {
    if expected.size == found.size {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch {
            context,
            expected: expected.size,
            found: found.size,
        })
    }
}

fn check_simplex(values: &[f64], tol: f64) -> std::result::Result<(), String> {
    let mut total = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(format!("entry {i} is {v}, expected a finite non-negative value"));
        }
        total += v;
    }
    if (total - 1.0).abs() > tol {
        return Err(format!("entries sum to {total}, expected 1"));
    }
    Ok(())
}

/// A probability mass function over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    alphabet: Alphabet,
    mass: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(alphabet: Alphabet, mass: Vec<f64>) -> Result<Self> {
        Self::checked(alphabet, mass, CONSTRUCTION_TOL)
    }

    /// Distribution over an unlabeled alphabet sized to `mass`.
    pub fn from_masses(mass: Vec<f64>) -> Result<Self> {
        Self::new(Alphabet::new(mass.len())?, mass)
    }

    pub(crate) fn from_computed(alphabet: Alphabet, mass: Vec<f64>) -> Result<Self> {
        Self::checked(alphabet, mass, ARITHMETIC_TOL)
    }

    fn checked(alphabet: Alphabet, mass: Vec<f64>, tol: f64) -> Result<Self> {
        if mass.len() != alphabet.size() {
            return Err(Error::AlphabetMismatch {
                context: "distribution",
                expected: alphabet.size(),
                found: mass.len(),
            });
        }
        check_simplex(&mass, tol).map_err(Error::Distribution)?;
        Ok(Self { alphabet, mass })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        let alphabet = Alphabet::new(size)?;
        Ok(Self {
            alphabet,
            mass: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, index: usize) -> Result<Self> {
        let alphabet = Alphabet::new(size)?;
        alphabet.check_index(index)?;
        let mut mass = vec![0.0; size];
        mass[index] = 1.0;
        Ok(Self { alphabet, mass })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }
}

/// A conditional distribution `p(out | in)` stored as a row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != input.size() {
            return Err(Error::AlphabetMismatch {
                context: "channel rows",
                expected: input.size(),
                found: rows.len(),
            });
        }
        let mut flat = Vec::with_capacity(input.size() * output.size());
        for row in rows {
            if row.len() != output.size() {
                return Err(Error::AlphabetMismatch {
                    context: "channel row width",
                    expected: output.size(),
                    found: row.len(),
                });
            }
            flat.extend(row);
        }
        Self::from_flat(input, output, flat, CONSTRUCTION_TOL)
    }

    /// Channel between unlabeled alphabets sized from `rows`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        Self::new(Alphabet::new(rows.len())?, Alphabet::new(width)?, rows)
    }

    pub(crate) fn from_computed(input: Alphabet, output: Alphabet, rows: Vec<f64>) -> Result<Self> {
        Self::from_flat(input, output, rows, ARITHMETIC_TOL)
    }

    fn from_flat(input: Alphabet, output: Alphabet, rows: Vec<f64>, tol: f64) -> Result<Self> {
        debug_assert_eq!(rows.len(), input.size() * output.size());
        for (i, row) in rows.chunks(output.size()).enumerate() {
            check_simplex(row, tol).map_err(|m| Error::Channel(format!("row {i}: {m}")))?;
        }
        Ok(Self { input, output, rows })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Ok(DeterministicMap::identity(Alphabet::new(size)?).to_channel())
    }

    /// Channel that emits `letter` regardless of its input.
    pub fn constant(input: Alphabet, output: Alphabet, letter: usize) -> Result<Self> {
        output.check_index(letter)?;
        let n_out = output.size();
        let mut rows = vec![0.0; input.size() * n_out];
        for row in rows.chunks_mut(n_out) {
            row[letter] = 1.0;
        }
        Ok(Self { input, output, rows })
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.output.size();
        &self.rows[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.output.size())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.output.size() + j]
    }

    pub fn output_marginal(&self, p: &FiniteDistribution) -> Result<Vec<f64>> {
        ensure_same("output marginal", &self.input, p.alphabet())?;
        let mut q = vec![0.0; self.output.size()];
        for (row, &px) in self.rows().zip(p.mass()) {
            for (qj, &c) in q.iter_mut().zip(row) {
                *qj += px * c;
            }
        }
        Ok(q)
    }

    /// Output letters that some input row reaches with positive probability.
    pub fn emitted(&self) -> Vec<bool> {
        let mut used = vec![false; self.output.size()];
        for row in self.rows() {
            for (u, &c) in used.iter_mut().zip(row) {
                *u |= c > 0.0;
            }
        }
        used
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Channel, weight: f64) -> Result<Channel> {
        ensure_same("channel mixture input", &self.input, &other.input)?;
        ensure_same("channel mixture output", &self.output, &other.output)?;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();
        Channel::from_computed(self.input.clone(), self.output.clone(), rows)
    }
}

/// A deterministic map between finite alphabets, stored as a lookup table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicMap {
    input: Alphabet,
    output: Alphabet,
    table: Vec<usize>,
}

impl DeterministicMap {
    pub fn new(input: Alphabet, output: Alphabet, table: Vec<usize>) -> Result<Self> {
        if table.len() != input.size() {
            return Err(Error::AlphabetMismatch {
                context: "map table",
                expected: input.size(),
                found: table.len(),
            });
        }
        for &t in &table {
            output.check_index(t)?;
        }
        Ok(Self {
            input,
            output,
            table,
        })
    }

    /// Map over unlabeled alphabets; the output alphabet has `output_size` symbols.
    pub fn from_table(table: Vec<usize>, output_size: usize) -> Result<Self> {
        Self::new(Alphabet::new(table.len())?, Alphabet::new(output_size)?, table)
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        let table = (0..alphabet.size()).collect();
        Self {
            input: alphabet.clone(),
            output: alphabet,
            table,
        }
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, i: usize) -> usize {
        self.table[i]
    }

    /// Which output symbols are hit by some input.
    pub fn image(&self) -> Vec<bool> {
        let mut hit = vec![false; self.output.size()];
        for &t in &self.table {
            hit[t] = true;
        }
        hit
    }

    pub fn is_surjective(&self) -> bool {
        self.image().into_iter().all(|h| h)
    }

    pub fn preimage(&self, j: usize) -> Vec<usize> {
        self.table
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| (t == j).then_some(i))
            .collect()
    }

    /// The map lifted to a channel whose rows are point masses.
    pub fn to_channel(&self) -> Channel {
        let n_out = self.output.size();
        let mut rows = vec![0.0; self.input.size() * n_out];
        for (row, &t) in rows.chunks_mut(n_out).zip(&self.table) {
            row[t] = 1.0;
        }
        Channel {
            input: self.input.clone(),
            output: self.output.clone(),
            rows,
        }
    }
}

/// `b ∘ a`: apply `a` first, then `b`.
pub fn compose(a: &DeterministicMap, b: &DeterministicMap) -> Result<DeterministicMap> {
    ensure_same("map composition", &b.input, &a.output)?;
    Ok(DeterministicMap {
        input: a.input.clone(),
        output: b.output.clone(),
        table: a.table.iter().map(|&i| b.table[i]).collect(),
    })
}

/// Distribution of `m(X)` for `X ~ p`.
pub fn pushforward(p: &FiniteDistribution, m: &DeterministicMap) -> Result<FiniteDistribution> {
    ensure_same("pushforward", &m.input, p.alphabet())?;
    let mut mass = vec![0.0; m.output.size()];
    for (&t, &px) in m.table.iter().zip(p.mass()) {
        mass[t] += px;
    }
    FiniteDistribution::from_computed(m.output.clone(), mass)
}

/// The chain `X → c → m`: post-process a channel's output with a map.
pub fn channel_then_map(c: &Channel, m: &DeterministicMap) -> Result<Channel> {
    ensure_same("channel then map", &m.input, &c.output)?;
    let n_out = m.output.size();
    let mut rows = vec![0.0; c.input.size() * n_out];
    for (dst, src) in rows.chunks_mut(n_out).zip(c.rows()) {
        for (&t, &v) in m.table.iter().zip(src) {
            dst[t] += v;
        }
    }
    Channel::from_computed(c.input.clone(), m.output.clone(), rows)
}

/// The chain `X → m → c`: feed a map's output into a channel.
pub fn map_then_channel(m: &DeterministicMap, c: &Channel) -> Result<Channel> {
    ensure_same("map then channel", &c.input, &m.output)?;
    let mut rows = Vec::with_capacity(m.input.size() * c.output.size());
    for &t in &m.table {
        rows.extend_from_slice(c.row(t));
    }
    Channel::from_computed(m.input.clone(), c.output.clone(), rows)
}

/// Shannon entropy in bits.
pub fn entropy(p: &FiniteDistribution) -> f64 {
    -p.mass()
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| m * m.log2())
        .sum::<f64>()
}

/// `I(X; X̂)` in bits for `X ~ p` and `X̂ | X ~ c`.
pub fn mutual_information(p: &FiniteDistribution, c: &Channel) -> Result<f64> {
    let q = c.output_marginal(p)?;
    let mut info = 0.0;
    for (row, &px) in c.rows().zip(p.mass()) {
        if px <= 0.0 {
            continue;
        }
        for (&cij, &qj) in row.iter().zip(&q) {
            if cij > 0.0 && qj > 0.0 {
                info += px * cij * (cij / qj).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

/// Pairwise distortion values between a source and a reproduction alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionMatrix {
    row_alphabet: Alphabet,
    col_alphabet: Alphabet,
    values: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(row_alphabet: Alphabet, col_alphabet: Alphabet, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != row_alphabet.size() {
            return Err(Error::AlphabetMismatch {
                context: "distortion rows",
                expected: row_alphabet.size(),
                found: values.len(),
            });
        }
        let mut flat = Vec::with_capacity(row_alphabet.size() * col_alphabet.size());
        for row in values {
            if row.len() != col_alphabet.size() {
                return Err(Error::AlphabetMismatch {
                    context: "distortion row width",
                    expected: col_alphabet.size(),
                    found: row.len(),
                });
            }
            flat.extend(row);
        }
        Self::from_flat(row_alphabet, col_alphabet, flat)
    }

    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self> {
        let width = values.first().map_or(0, Vec::len);
        Self::new(Alphabet::new(values.len())?, Alphabet::new(width)?, values)
    }

    pub fn from_fn(
        row_alphabet: Alphabet,
        col_alphabet: Alphabet,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let (n, m) = (row_alphabet.size(), col_alphabet.size());
        let values = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| f(i, j)).collect();
        Self::from_flat(row_alphabet, col_alphabet, values)
    }

    fn from_flat(row_alphabet: Alphabet, col_alphabet: Alphabet, values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            let m = col_alphabet.size();
            return Err(Error::Distortion(format!(
                "entry ({}, {}) is {v}, expected a finite non-negative value",
                k / m,
                k % m
            )));
        }
        Ok(Self {
            row_alphabet,
            col_alphabet,
            values,
        })
    }

    /// 0 on the diagonal, 1 elsewhere.
    pub fn hamming(size: usize) -> Result<Self> {
        let a = Alphabet::new(size)?;
        Self::from_fn(a.clone(), a, |i, j| if i == j { 0.0 } else { 1.0 })
    }

    pub fn row_alphabet(&self) -> &Alphabet {
        &self.row_alphabet
    }

    pub fn col_alphabet(&self) -> &Alphabet {
        &self.col_alphabet
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.col_alphabet.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.col_alphabet.size();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.col_alphabet.size())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// `E[d(X, X̂)]` for `X ~ p` and `X̂ | X ~ c`.
pub fn expected_distortion(p: &FiniteDistribution, c: &Channel, d: &DistortionMatrix) -> Result<f64> {
    ensure_same("expected distortion source", &c.input, p.alphabet())?;
    ensure_same("expected distortion rows", &d.row_alphabet, &c.input)?;
    ensure_same("expected distortion columns", &d.col_alphabet, &c.output)?;
    let mut total = 0.0;
    for ((row, drow), &px) in c.rows().zip(d.rows()).zip(p.mass()) {
        let inner: f64 = row.iter().zip(drow).map(|(&cij, &dij)| cij * dij).sum();
        total += px * inner;
    }
    Ok(total)
}

/// Redirect every emission of reproduction letter `drop` to `keep`.
pub fn merge_reproduction_letters(c: &Channel, keep: usize, drop: usize) -> Result<Channel> {
    c.output.check_index(keep)?;
    c.output.check_index(drop)?;
    if keep == drop {
        return Err(Error::Channel(format!("cannot merge letter {keep} into itself")));
    }
    let mut merged = c.clone();
    let w = c.output.size();
    for row in merged.rows.chunks_mut(w) {
        row[keep] += row[drop];
        row[drop] = 0.0;
    }
    Ok(merged)
}

/// A deterministic task model realized as a chain of stage maps.
///
/// Boundary positions run from 0 (the input `X`) to `stages.len()` (the task
/// output `T`); named cuts label the intermediate boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskModel {
    stages: Vec<DeterministicMap>,
    cuts: BTreeMap<String, usize>,
}

pub const INPUT_BOUNDARY: &str = "X";
pub const TASK_BOUNDARY: &str = "T";

impl TaskModel {
    pub fn new(stages: Vec<DeterministicMap>, cuts: BTreeMap<String, usize>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::TaskModel("a task model needs at least one stage".into()));
        }
        for (k, pair) in stages.windows(2).enumerate() {
            if pair[0].output.size() != pair[1].input.size() {
                return Err(Error::TaskModel(format!(
                    "stage {k} outputs {} symbols but stage {} expects {}",
                    pair[0].output.size(),
                    k + 1,
                    pair[1].input.size()
                )));
            }
        }
        for (name, &pos) in &cuts {
            if name == INPUT_BOUNDARY || name == TASK_BOUNDARY {
                return Err(Error::TaskModel(format!("cut name {name:?} is reserved")));
            }
            if pos == 0 || pos >= stages.len() {
                return Err(Error::TaskModel(format!(
                    "cut {name:?} at position {pos} is not an interior boundary of a {}-stage model",
                    stages.len()
                )));
            }
        }
        Ok(Self { stages, cuts })
    }

    /// The two-stage model `f = h ∘ g` with the intermediate boundary named `cut`.
    pub fn split(g: DeterministicMap, h: DeterministicMap, cut: &str) -> Result<Self> {
        Self::new(vec![g, h], BTreeMap::from([(cut.to_string(), 1)]))
    }

    pub fn stages(&self) -> &[DeterministicMap] {
        &self.stages
    }

    pub fn cuts(&self) -> &BTreeMap<String, usize> {
        &self.cuts
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Position of a named boundary; `X` and `T` are always defined.
    pub fn boundary(&self, name: &str) -> Result<usize> {
        match name {
            INPUT_BOUNDARY => Ok(0),
            TASK_BOUNDARY => Ok(self.stages.len()),
            _ => self
                .cuts
                .get(name)
                .copied()
                .ok_or_else(|| Error::TaskModel(format!("unknown boundary {name:?}"))),
        }
    }

    pub fn alphabet_at(&self, position: usize) -> &Alphabet {
        if position == 0 {
            &self.stages[0].input
        } else {
            &self.stages[position - 1].output
        }
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        self.alphabet_at(0)
    }

    pub fn task_alphabet(&self) -> &Alphabet {
        self.alphabet_at(self.stages.len())
    }

    /// Composition of the stages between two boundary positions.
    pub fn map_between(&self, from: usize, to: usize) -> Result<DeterministicMap> {
        if from > to || to > self.stages.len() {
            return Err(Error::TaskModel(format!(
                "no forward map from boundary {from} to boundary {to}"
            )));
        }
        let mut map = DeterministicMap::identity(self.alphabet_at(from).clone());
        for stage in &self.stages[from..to] {
            map = compose(&map, stage)?;
        }
        Ok(map)
    }

    /// The full task model `f`.
    pub fn full_map(&self) -> DeterministicMap {
        self.map_between(0, self.stages.len())
            .expect("full range is always a valid forward map")
    }
}

/// Replace each reproduction letter at `cut` with a representative input
/// letter from the set `f⁻¹(h(ŷ))`, where `h` maps the cut to the task output.
///
/// The representative is the lowest input index in the set. Letters the
/// channel never emits are ignored; an emitted letter whose task output is
/// outside the image of `f` is an error.
pub fn lift_reproduction(c: &Channel, model: &TaskModel, cut: &str) -> Result<Channel> {
    let position = model.boundary(cut)?;
    ensure_same("lift reproduction", model.alphabet_at(position), &c.output)?;
    let representatives = lift_representatives(model, position)?;
    let emitted = c.emitted();
    let mut table = Vec::with_capacity(c.output.size());
    for (letter, rep) in representatives.into_iter().enumerate() {
        match rep {
            Ok(x) => table.push(x),
            Err(_) if !emitted[letter] => table.push(0),
            Err(task_output) => return Err(Error::LiftHypothesis { letter, task_output }),
        }
    }
    let lift = DeterministicMap::new(c.output.clone(), model.input_alphabet().clone(), table)?;
    channel_then_map(c, &lift)
}

/// For each letter at `position`, the lowest input index with the same task
/// output, or the unreachable task output.
pub(crate) fn lift_representatives(
    model: &TaskModel,
    position: usize,
) -> Result<Vec<std::result::Result<usize, usize>>> {
    let f = model.full_map();
    let h = model.map_between(position, model.depth())?;
    Ok(h.table()
        .iter()
        .map(|&t| f.table().iter().position(|&ft| ft == t).ok_or(t))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn g4() -> DeterministicMap {
        DeterministicMap::from_table(vec![0, 0, 1, 1], 2).unwrap()
    }

    #[test]
    fn alphabet_limits() {
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::new(MAX_ALPHABET).is_ok());
        assert!(Alphabet::new(MAX_ALPHABET + 1).is_err());
        assert!(Alphabet::with_labels(vec!["a".into(), "a".into()]).is_err());
        let a = Alphabet::with_labels(vec!["sq".into(), "ci".into()]).unwrap();
        assert_eq!(a.label(1), "ci");
    }

    #[test]
    fn distribution_validation() {
        assert!(FiniteDistribution::from_masses(vec![0.5, 0.5]).is_ok());
        assert!(FiniteDistribution::from_masses(vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::from_masses(vec![1.5, -0.5]).is_err());
        assert!(FiniteDistribution::from_masses(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn channel_validation() {
        assert!(Channel::from_rows(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(Channel::from_rows(vec![vec![0.5, 0.4], vec![1.0, 0.0]]).is_err());
        assert!(Channel::from_rows(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn compose_identity() {
        let id = DeterministicMap::identity(Alphabet::new(3).unwrap());
        assert_eq!(compose(&id, &id).unwrap(), id);
    }

    #[test]
    fn compose_lookup() {
        let h = DeterministicMap::from_table(vec![1, 0], 2).unwrap();
        let f = compose(&g4(), &h).unwrap();
        assert_eq!(f.table(), &[1, 1, 0, 0]);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let h = DeterministicMap::from_table(vec![0, 0, 0], 1).unwrap();
        assert!(matches!(compose(&g4(), &h), Err(Error::AlphabetMismatch { .. })));
    }

    #[test]
    fn pushforward_examples() {
        let u = FiniteDistribution::uniform(4).unwrap();
        assert_eq!(pushforward(&u, &g4()).unwrap().mass(), &[0.5, 0.5]);
        let pm = FiniteDistribution::point_mass(4, 2).unwrap();
        assert_eq!(pushforward(&pm, &g4()).unwrap().mass(), &[0.0, 1.0]);
        let bad = FiniteDistribution::uniform(3).unwrap();
        assert!(pushforward(&bad, &g4()).is_err());
    }

    #[test]
    fn identity_map_then_channel_is_unchanged() {
        let c = Channel::from_rows(vec![vec![0.2, 0.8], vec![0.6, 0.4], vec![1.0, 0.0]]).unwrap();
        let id = DeterministicMap::identity(Alphabet::new(3).unwrap());
        assert_eq!(map_then_channel(&id, &c).unwrap(), c);
    }

    #[test]
    fn deterministic_channel_rows_are_point_masses() {
        let c = g4().to_channel();
        for (i, row) in c.rows().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if g4().apply(i) == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn mutual_information_examples() {
        let u4 = FiniteDistribution::uniform(4).unwrap();
        let id = Channel::identity(4).unwrap();
        assert!(close(mutual_information(&u4, &id).unwrap(), 2.0, 1e-12));

        let constant = Channel::constant(Alphabet::new(4).unwrap(), Alphabet::new(3).unwrap(), 1).unwrap();
        assert_eq!(mutual_information(&u4, &constant).unwrap(), 0.0);

        let e = 0.11_f64;
        let bsc = Channel::from_rows(vec![vec![1.0 - e, e], vec![e, 1.0 - e]]).unwrap();
        let u2 = FiniteDistribution::uniform(2).unwrap();
        let hb = -(e * e.log2() + (1.0 - e) * (1.0 - e).log2());
        let info = mutual_information(&u2, &bsc).unwrap();
        assert!(close(info, 1.0 - hb, 1e-12));
        assert!(close(info, 0.5, 1e-3));
    }

    #[test]
    fn entropy_and_distortion_examples() {
        assert!(close(entropy(&FiniteDistribution::uniform(8).unwrap()), 3.0, 1e-12));
        assert_eq!(entropy(&FiniteDistribution::point_mass(5, 3).unwrap()), 0.0);
        let u = FiniteDistribution::uniform(3).unwrap();
        let d = DistortionMatrix::hamming(3).unwrap();
        let id = Channel::identity(3).unwrap();
        assert_eq!(expected_distortion(&u, &id, &d).unwrap(), 0.0);
        let wrong = DistortionMatrix::hamming(2).unwrap();
        assert!(expected_distortion(&u, &id, &wrong).is_err());
    }

    #[test]
    fn distortion_matrix_rejects_negative() {
        assert!(DistortionMatrix::from_rows(vec![vec![0.0, -1.0]]).is_err());
        assert!(DistortionMatrix::from_rows(vec![vec![0.0, f64::INFINITY]]).is_err());
    }

    #[test]
    fn merge_unused_letter_is_noop() {
        let c = Channel::from_rows(vec![vec![0.3, 0.7, 0.0], vec![0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(merge_reproduction_letters(&c, 0, 2).unwrap(), c);
    }

    #[test]
    fn merge_two_outputs_gives_constant() {
        let c = Channel::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = merge_reproduction_letters(&c, 0, 1).unwrap();
        let p = FiniteDistribution::uniform(2).unwrap();
        assert_eq!(mutual_information(&p, &m).unwrap(), 0.0);
        assert!(m.rows().all(|r| r == [1.0, 0.0]));
    }

    #[test]
    fn merge_guards() {
        let c = Channel::identity(3).unwrap();
        assert!(merge_reproduction_letters(&c, 1, 1).is_err());
        assert!(matches!(
            merge_reproduction_letters(&c, 0, 3),
            Err(Error::IndexOutOfRange { index: 3, size: 3 })
        ));
    }

    #[test]
    fn task_model_boundaries() {
        let h = DeterministicMap::from_table(vec![1, 0], 2).unwrap();
        let model = TaskModel::split(g4(), h, "Y").unwrap();
        assert_eq!(model.boundary("X").unwrap(), 0);
        assert_eq!(model.boundary("Y").unwrap(), 1);
        assert_eq!(model.boundary("T").unwrap(), 2);
        assert!(model.boundary("Z").is_err());
        assert_eq!(model.full_map().table(), &[1, 1, 0, 0]);
        assert_eq!(model.map_between(1, 1).unwrap().table(), &[0, 1]);

        let bad = DeterministicMap::from_table(vec![0, 0, 0], 1).unwrap();
        assert!(TaskModel::split(g4(), bad, "Y").is_err());
        assert!(TaskModel::new(vec![g4()], BTreeMap::from([("Y".to_string(), 1)])).is_err());
    }

    #[test]
    fn lift_identity_model_is_identity() {
        let a = Alphabet::new(3).unwrap();
        let id = DeterministicMap::identity(a.clone());
        let model = TaskModel::split(id.clone(), id, "Y").unwrap();
        let c = Channel::from_rows(vec![vec![0.2, 0.3, 0.5], vec![0.0, 1.0, 0.0], vec![0.4, 0.4, 0.2]]).unwrap();
        assert_eq!(lift_reproduction(&c, &model, "Y").unwrap(), c);
    }

    #[test]
    fn lift_constant_h_uses_lowest_index() {
        let h = DeterministicMap::from_table(vec![0, 0], 1).unwrap();
        let model = TaskModel::split(g4(), h, "Y").unwrap();
        let c = Channel::from_rows(vec![vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        let lifted = lift_reproduction(&c, &model, "Y").unwrap();
        assert_eq!(lifted.output().size(), 4);
        assert!(lifted.rows().all(|r| r == [1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn lift_rejects_unreachable_task_output() {
        // g never reaches y = 2, and h sends it to the otherwise unused class 2.
        let g = DeterministicMap::from_table(vec![0, 0, 1, 1], 3).unwrap();
        let h = DeterministicMap::from_table(vec![0, 1, 2], 3).unwrap();
        let model = TaskModel::split(g, h, "Y").unwrap();
        let emits_2 = Channel::from_rows(vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            lift_reproduction(&emits_2, &model, "Y"),
            Err(Error::LiftHypothesis { letter: 2, task_output: 2 })
        ));
        let avoids_2 = Channel::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(lift_reproduction(&avoids_2, &model, "Y").is_ok());
    }
}
