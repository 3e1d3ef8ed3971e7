//! Random reservoir circuits.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index. Multi-qubit gates see their targets in the
//! listed order, `targets[0]` being the most significant local bit.
//!
//! Randomness: gate `i` of a circuit with seed `s` draws from ChaCha8 seeded
//! with `s` on stream `i`; the D-family permutation uses stream `u64::MAX`.
//! Output is therefore independent of how ensembles are scheduled.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::matrix::{ComplexMatrix, StateVector, C64};
use crate::random::{haar_unitary, stream_rng};

/// Largest width for which a dense unitary is formed.
pub const DEFAULT_MAX_QUBITS: usize = 12;
/// Largest width accepted by [`pauli_transfer`].
pub const PAULI_TRANSFER_MAX_QUBITS: usize = 8;
/// Default gate count for the non-diagonal families.
pub const DEFAULT_DEPTH: usize = 40;
const GATE_TOL: f64 = 1e-10;
const PAULI_CUTOFF: f64 = 1e-10;
const PERMUTATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("unknown circuit family '{0}'")]
    UnknownFamily(String),
    #[error("family {family} needs at least {needed} qubits, got {n}")]
    TooFewQubits { family: Family, n: usize, needed: usize },
    #[error("depth must be at least 1")]
    InvalidDepth,
    #[error("{n} qubits exceeds the dense budget of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("state dimension {found} does not match 2^{n}")]
    DimensionMismatch { n: usize, found: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("gate {kind} is not part of family {family}")]
    ForeignGate { kind: &'static str, family: Family },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    G1,
    G2,
    G3,
    MG,
    D2,
    D3,
    DN,
    /// No gates; a no-op reservoir used as a diagnostic baseline.
    Identity,
}

impl Family {
    /// The seven reservoir families in reporting order.
    pub const RESERVOIRS: [Family; 7] = [
        Family::G1,
        Family::G2,
        Family::G3,
        Family::MG,
        Family::D2,
        Family::D3,
        Family::DN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::G1 => "G1",
            Family::G2 => "G2",
            Family::G3 => "G3",
            Family::MG => "MG",
            Family::D2 => "D2",
            Family::D3 => "D3",
            Family::DN => "DN",
            Family::Identity => "ID",
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Family::D2 | Family::D3 | Family::DN)
    }

    fn min_qubits(self) -> usize {
        match self {
            Family::D3 => 3,
            Family::Identity => 1,
            _ => 2,
        }
    }

    fn allows(self, kind: &GateKind) -> bool {
        use GateKind::*;
        match self {
            Family::G1 => matches!(kind, Cnot | H | X),
            Family::G2 => matches!(kind, Cnot | H | S),
            Family::G3 => matches!(kind, Cnot | H | T),
            Family::MG => matches!(kind, Matchgate { .. }),
            Family::D2 | Family::D3 | Family::DN => matches!(kind, H | Diag { .. }),
            Family::Identity => false,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "G1" => Family::G1,
            "G2" => Family::G2,
            "G3" => Family::G3,
            "MG" => Family::MG,
            "D2" => Family::D2,
            "D3" => Family::D3,
            "DN" | "Dn" => Family::DN,
            "ID" => Family::Identity,
            other => return Err(CircuitError::UnknownFamily(other.to_string())),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    Cnot,
    H,
    X,
    S,
    T,
    /// A acts on span{|00⟩, |11⟩}, B on span{|01⟩, |10⟩}; both row-major.
    Matchgate { a: [C64; 4], b: [C64; 4] },
    /// e^{iφ_j} on local basis state j; 2^k phases in [0, 2π).
    Diag { phases: Vec<f64> },
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Cnot => "CNOT",
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::Matchgate { .. } => "MATCHGATE",
            GateKind::Diag { .. } => "DIAG",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

fn det2(m: &[C64; 4]) -> C64 {
    m[0] * m[3] - m[1] * m[2]
}

fn unitary2_defect(m: &[C64; 4]) -> f64 {
    let g = [
        m[0].norm_sqr() + m[2].norm_sqr() - 1.0,
        m[1].norm_sqr() + m[3].norm_sqr() - 1.0,
    ];
    let off = (m[0].conj() * m[1] + m[2].conj() * m[3]).norm();
    g[0].abs().max(g[1].abs()).max(off)
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self, CircuitError> {
        let arity = match &kind {
            GateKind::H | GateKind::X | GateKind::S | GateKind::T => 1,
            GateKind::Cnot | GateKind::Matchgate { .. } => 2,
            GateKind::Diag { phases } => {
                let k = targets.len();
                if k == 0 || k >= usize::BITS as usize || phases.len() != 1usize << k {
                    return Err(CircuitError::InvalidGate(format!(
                        "DIAG on {k} qubits needs {} phases, got {}",
                        if k < 63 { 1u64 << k } else { 0 },
                        phases.len()
                    )));
                }
                if let Some(p) = phases.iter().find(|p| !(0.0..2.0 * PI).contains(*p)) {
                    return Err(CircuitError::InvalidGate(format!("phase {p} outside [0, 2π)")));
                }
                k
            }
        };
        if targets.len() != arity {
            return Err(CircuitError::InvalidGate(format!(
                "{} takes {arity} targets, got {}",
                kind.name(),
                targets.len()
            )));
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(CircuitError::InvalidGate(format!("repeated target {t}")));
            }
        }
        if let GateKind::Matchgate { a, b } = &kind {
            let defect = unitary2_defect(a).max(unitary2_defect(b));
            if defect > GATE_TOL {
                return Err(CircuitError::InvalidGate(format!("matchgate block not unitary ({defect:.3e})")));
            }
            let dd = (det2(a) - det2(b)).norm();
            if dd > GATE_TOL {
                return Err(CircuitError::InvalidGate(format!("matchgate determinants differ by {dd:.3e}")));
            }
        }
        Ok(Self { kind, targets })
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Local matrix in the basis of `targets`, row-major, dimension 2^arity.
    pub fn local_matrix(&self) -> Vec<C64> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match &self.kind {
            GateKind::H => vec![h, h, h, -h],
            GateKind::X => vec![zero, one, one, zero],
            GateKind::S => vec![one, zero, zero, C64::new(0.0, 1.0)],
            GateKind::T => vec![one, zero, zero, C64::from_polar(1.0, FRAC_PI_4)],
            GateKind::Cnot => {
                let mut m = vec![zero; 16];
                for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    m[4 * r + c] = one;
                }
                m
            }
            GateKind::Matchgate { a, b } => {
                let mut m = vec![zero; 16];
                m[0] = a[0];
                m[3] = a[1];
                m[12] = a[2];
                m[15] = a[3];
                m[5] = b[0];
                m[6] = b[1];
                m[9] = b[2];
                m[10] = b[3];
                m
            }
            GateKind::Diag { phases } => {
                let d = phases.len();
                let mut m = vec![zero; d * d];
                for (j, &p) in phases.iter().enumerate() {
                    m[j * d + j] = C64::from_polar(1.0, p);
                }
                m
            }
        }
    }

    /// Applies the gate in place to an n-qubit amplitude vector.
    fn apply(&self, amps: &mut [C64], n: usize) {
        let bit = |q: usize| 1usize << (n - 1 - q);
        match &self.kind {
            GateKind::Cnot => {
                let (c, t) = (bit(self.targets[0]), bit(self.targets[1]));
                for i in 0..amps.len() {
                    if i & c != 0 && i & t == 0 {
                        amps.swap(i, i | t);
                    }
                }
            }
            GateKind::Diag { phases } => {
                let factors: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
                let masks: Vec<usize> = self.targets.iter().map(|&q| bit(q)).collect();
                for (i, z) in amps.iter_mut().enumerate() {
                    let local = masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(i & m != 0));
                    *z *= factors[local];
                }
            }
            GateKind::Matchgate { .. } => {
                let m = self.local_matrix();
                let (b0, b1) = (bit(self.targets[0]), bit(self.targets[1]));
                for i in 0..amps.len() {
                    if i & (b0 | b1) != 0 {
                        continue;
                    }
                    let idx = [i, i | b1, i | b0, i | b0 | b1];
                    let v = idx.map(|k| amps[k]);
                    for (r, &k) in idx.iter().enumerate() {
                        amps[k] = (0..4).map(|c| m[4 * r + c] * v[c]).sum();
                    }
                }
            }
            _ => {
                let m = self.local_matrix();
                let b = bit(self.targets[0]);
                for i in 0..amps.len() {
                    if i & b == 0 {
                        let (x, y) = (amps[i], amps[i | b]);
                        amps[i] = m[0] * x + m[1] * y;
                        amps[i | b] = m[2] * x + m[3] * y;
                    }
                }
            }
        }
    }
}

/// Ordered gate list with the metadata needed to regenerate it.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    n: usize,
    family: Family,
    depth: usize,
    seed: u64,
    gates: Vec<Gate>,
}

impl CircuitSpec {
    pub fn new(n: usize, family: Family, depth: usize, seed: u64, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        if n == 0 || n >= usize::BITS as usize {
            return Err(CircuitError::InvalidGate(format!("unsupported qubit count {n}")));
        }
        for g in &gates {
            if let Some(&t) = g.targets.iter().find(|&&t| t >= n) {
                return Err(CircuitError::InvalidGate(format!("target {t} outside {n} qubits")));
            }
            if !family.allows(&g.kind) {
                return Err(CircuitError::ForeignGate {
                    kind: g.kind.name(),
                    family,
                });
            }
        }
        Ok(Self {
            n,
            family,
            depth,
            seed,
            gates,
        })
    }

    /// Gate-free circuit on n qubits.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            family: Family::Identity,
            depth: 0,
            seed: 0,
            gates: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// True when every two-qubit gate acts on adjacent qubits.
    pub fn is_nearest_neighbour(&self) -> bool {
        self.gates
            .iter()
            .filter(|g| g.targets.len() == 2)
            .all(|g| g.targets[0].abs_diff(g.targets[1]) == 1)
    }

    /// Line-oriented text form; see [`parse_circuit`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# qubit 0 = most significant bit; params: re im pairs row-major (A then B) or phases\n");
        let _ = writeln!(out, "{} {} {} {}", self.family, self.n, self.depth, self.seed);
        for g in &self.gates {
            out.push_str(g.kind.name());
            if let GateKind::Diag { .. } = g.kind {
                let _ = write!(out, " {}", g.targets.len());
            }
            for t in &g.targets {
                let _ = write!(out, " {t}");
            }
            match &g.kind {
                GateKind::Matchgate { a, b } => {
                    for z in a.iter().chain(b.iter()) {
                        let _ = write!(out, " {} {}", fmt17(z.re), fmt17(z.im));
                    }
                }
                GateKind::Diag { phases } => {
                    for p in phases {
                        let _ = write!(out, " {}", fmt17(*p));
                    }
                }
                _ => {}
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits; enough to reproduce any f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses the text produced by [`CircuitSpec::to_text`]. Blank lines and
/// lines starting with `#` are ignored.
///
/// ```text
/// G3 4 40 7
/// CNOT 0 3        # control target
/// T 1
/// MATCHGATE 0 1 <16 reals>
/// DIAG 2 0 3 <4 phases>
/// ```
pub fn parse_circuit(text: &str) -> Result<CircuitSpec, CircuitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, msg: String| CircuitError::Parse { line, msg };

    let (hline, header) = lines.next().ok_or_else(|| perr(0, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(perr(hline, format!("header needs 4 fields, got {}", fields.len())));
    }
    let family: Family = fields[0].parse().map_err(|e: CircuitError| perr(hline, e.to_string()))?;
    let n: usize = fields[1].parse().map_err(|_| perr(hline, format!("bad qubit count '{}'", fields[1])))?;
    let depth: usize = fields[2].parse().map_err(|_| perr(hline, format!("bad depth '{}'", fields[2])))?;
    let seed: u64 = fields[3].parse().map_err(|_| perr(hline, format!("bad seed '{}'", fields[3])))?;
    if n == 0 || n > 30 {
        return Err(perr(hline, format!("unsupported qubit count {n}")));
    }

    let mut gates = Vec::new();
    for (ln, line) in lines {
        let mut tok = line.split_whitespace();
        let name = tok.next().unwrap_or("");
        let rest: Vec<&str> = tok.collect();
        let uint = |s: &str| s.parse::<usize>().map_err(|_| perr(ln, format!("bad integer '{s}'")));
        let real = |s: &str| -> Result<f64, CircuitError> {
            let x: f64 = s.parse().map_err(|_| perr(ln, format!("bad number '{s}'")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(perr(ln, format!("non-finite number '{s}'")))
            }
        };
        let (kind, targets) = match name {
            "CNOT" | "H" | "X" | "S" | "T" => {
                let targets = rest.iter().map(|s| uint(s)).collect::<Result<Vec<_>, _>>()?;
                let kind = match name {
                    "CNOT" => GateKind::Cnot,
                    "H" => GateKind::H,
                    "X" => GateKind::X,
                    "S" => GateKind::S,
                    _ => GateKind::T,
                };
                (kind, targets)
            }
            "MATCHGATE" => {
                if rest.len() != 18 {
                    return Err(perr(ln, format!("MATCHGATE needs 2 targets and 16 reals, got {} fields", rest.len())));
                }
                let targets = vec![uint(rest[0])?, uint(rest[1])?];
                let x = rest[2..].iter().map(|s| real(s)).collect::<Result<Vec<_>, _>>()?;
                let z = |k: usize| C64::new(x[2 * k], x[2 * k + 1]);
                let a = [z(0), z(1), z(2), z(3)];
                let b = [z(4), z(5), z(6), z(7)];
                (GateKind::Matchgate { a, b }, targets)
            }
            "DIAG" => {
                let k = uint(rest.first().ok_or_else(|| perr(ln, "DIAG needs an arity".into()))?)?;
                if k == 0 || k > n {
                    return Err(perr(ln, format!("DIAG arity {k} outside 1..={n}")));
                }
                if rest.len() != 1 + k + (1usize << k) {
                    return Err(perr(ln, format!("DIAG {k} needs {} fields after the arity", k + (1usize << k))));
                }
                let targets = rest[1..=k].iter().map(|s| uint(s)).collect::<Result<Vec<_>, _>>()?;
                let phases = rest[1 + k..].iter().map(|s| real(s)).collect::<Result<Vec<_>, _>>()?;
                (GateKind::Diag { phases }, targets)
            }
            other => return Err(perr(ln, format!("unknown gate '{other}'"))),
        };
        gates.push(Gate::new(kind, targets).map_err(|e| perr(ln, e.to_string()))?);
    }
    CircuitSpec::new(n, family, depth, seed, gates).map_err(|e| perr(0, e.to_string()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleOptions {
    /// Restrict MATCHGATE placement to adjacent qubit pairs.
    pub nearest_neighbour_mg: bool,
}

fn distinct_pair<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    vec![a, b]
}

fn haar_block<R: Rng>(rng: &mut R) -> [C64; 4] {
    let u = haar_unitary(2, rng);
    [u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]]
}

fn random_phases<R: Rng>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn sample_circuit(family: Family, n: usize, depth: usize, seed: u64) -> Result<CircuitSpec, CircuitError> {
    sample_circuit_with(family, n, depth, seed, &SampleOptions::default())
}

/// Draws a circuit of the given family. For G1/G2/G3/MG each of the `depth`
/// gates first picks its kind uniformly, then uniform distinct targets.
/// D-families ignore `depth`.
pub fn sample_circuit_with(
    family: Family,
    n: usize,
    depth: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<CircuitSpec, CircuitError> {
    if n < family.min_qubits() {
        return Err(CircuitError::TooFewQubits {
            family,
            n,
            needed: family.min_qubits(),
        });
    }
    if n > 30 {
        return Err(CircuitError::TooLarge { n, max: 30 });
    }
    let mut gates = Vec::new();
    match family {
        Family::Identity => {}
        Family::G1 | Family::G2 | Family::G3 => {
            if depth == 0 {
                return Err(CircuitError::InvalidDepth);
            }
            let phase_gate = match family {
                Family::G1 => GateKind::X,
                Family::G2 => GateKind::S,
                _ => GateKind::T,
            };
            for i in 0..depth {
                let mut rng = stream_rng(seed, i as u64);
                let gate = match rng.random_range(0..3) {
                    0 => Gate::new(GateKind::Cnot, distinct_pair(n, &mut rng))?,
                    1 => Gate::new(GateKind::H, vec![rng.random_range(0..n)])?,
                    _ => Gate::new(phase_gate.clone(), vec![rng.random_range(0..n)])?,
                };
                gates.push(gate);
            }
        }
        Family::MG => {
            if depth == 0 {
                return Err(CircuitError::InvalidDepth);
            }
            for i in 0..depth {
                let mut rng = stream_rng(seed, i as u64);
                let targets = if opts.nearest_neighbour_mg {
                    let q = rng.random_range(0..n - 1);
                    vec![q, q + 1]
                } else {
                    distinct_pair(n, &mut rng)
                };
                let a = haar_block(&mut rng);
                let mut b = haar_block(&mut rng);
                let fix = (det2(&a) / det2(&b)).sqrt();
                for z in &mut b {
                    *z *= fix;
                }
                gates.push(Gate::new(GateKind::Matchgate { a, b }, targets)?);
            }
        }
        Family::D2 | Family::D3 | Family::DN => {
            let k = match family {
                Family::D2 => 2,
                Family::D3 => 3,
                _ => n,
            };
            let mut combos = combinations(n, k);
            combos.shuffle(&mut stream_rng(seed, PERMUTATION_STREAM));
            for q in 0..n {
                gates.push(Gate::new(GateKind::H, vec![q])?);
            }
            for (i, targets) in combos.into_iter().enumerate() {
                let mut rng = stream_rng(seed, i as u64);
                let phases = random_phases(1 << k, &mut rng);
                gates.push(Gate::new(GateKind::Diag { phases }, targets)?);
            }
            for q in 0..n {
                gates.push(Gate::new(GateKind::H, vec![q])?);
            }
        }
    }
    CircuitSpec::new(n, family, depth, seed, gates)
}

/// Dense unitary U = G_m ⋯ G_1 for gates listed in application order.
pub fn circuit_unitary(c: &CircuitSpec) -> Result<ComplexMatrix, CircuitError> {
    circuit_unitary_with_budget(c, DEFAULT_MAX_QUBITS)
}

pub fn circuit_unitary_with_budget(c: &CircuitSpec, max_qubits: usize) -> Result<ComplexMatrix, CircuitError> {
    if c.n > max_qubits {
        return Err(CircuitError::TooLarge { n: c.n, max: max_qubits });
    }
    let dim = 1usize << c.n;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for mut col in u.column_iter_mut() {
        let amps = col.as_mut_slice();
        for g in &c.gates {
            g.apply(amps, c.n);
        }
    }
    Ok(ComplexMatrix::new(u).expect("square by construction"))
}

/// U|ψ⟩ computed gate by gate.
pub fn apply_circuit(c: &CircuitSpec, psi: &StateVector) -> Result<StateVector, CircuitError> {
    if psi.dim() != 1usize << c.n {
        return Err(CircuitError::DimensionMismatch { n: c.n, found: psi.dim() });
    }
    let mut amps = psi.amplitudes().clone();
    for g in &c.gates {
        g.apply(amps.as_mut_slice(), c.n);
    }
    Ok(StateVector::from_unit(amps))
}

/// (⟨X_0⟩, ⟨Z_0⟩, …, ⟨X_{n−1}⟩, ⟨Z_{n−1}⟩).
pub fn pauli_features(psi: &StateVector, n: usize) -> Result<Vec<f64>, CircuitError> {
    if n == 0 || n >= usize::BITS as usize || psi.dim() != 1usize << n {
        return Err(CircuitError::DimensionMismatch { n, found: psi.dim() });
    }
    let a = psi.amplitudes();
    let mut out = Vec::with_capacity(2 * n);
    for q in 0..n {
        let b = 1usize << (n - 1 - q);
        let mut x = 0.0;
        let mut z = 0.0;
        for i in 0..a.len() {
            if i & b == 0 {
                x += 2.0 * (a[i].conj() * a[i | b]).re;
                z += a[i].norm_sqr() - a[i | b].norm_sqr();
            }
        }
        out.push(x.clamp(-1.0, 1.0));
        out.push(z.clamp(-1.0, 1.0));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn masks(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => crate::matrix::pauli::x(),
            Pauli::Y => crate::matrix::pauli::y(),
            Pauli::Z => crate::matrix::pauli::z(),
        }
    }
}

/// n-qubit Pauli string as X and Z bit masks (Y sets both), qubit 0 in the top bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub n: usize,
    pub x: usize,
    pub z: usize,
}

impl PauliString {
    pub fn single(n: usize, p: Pauli, qubit: usize) -> Self {
        let (x, z) = p.masks();
        let b = 1usize << (n - 1 - qubit);
        Self {
            n,
            x: if x { b } else { 0 },
            z: if z { b } else { 0 },
        }
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let b = 1usize << (self.n - 1 - qubit);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            f.write_str(match self.get(q) {
                Pauli::I => "I",
                Pauli::X => "X",
                Pauli::Y => "Y",
                Pauli::Z => "Z",
            })?;
        }
        Ok(())
    }
}

/// Expansion U P_q U† = Σ α_k P_k, keeping |α_k| > 1e-10, in ascending (x, z) order.
pub fn pauli_transfer(c: &CircuitSpec, p: Pauli, qubit: usize) -> Result<Vec<(PauliString, f64)>, CircuitError> {
    let n = c.n;
    if n > PAULI_TRANSFER_MAX_QUBITS {
        return Err(CircuitError::TooLarge {
            n,
            max: PAULI_TRANSFER_MAX_QUBITS,
        });
    }
    if qubit >= n {
        return Err(CircuitError::InvalidGate(format!("qubit {qubit} outside {n} qubits")));
    }
    let u = circuit_unitary(c)?;
    // U P: permute/phase the columns of U.
    let target = PauliString::single(n, p, qubit);
    let dim = 1usize << n;
    let ps = ComplexMatrix::from_fn(dim, |i, j| {
        if i ^ j == target.x {
            string_element(&target, i, j)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let m = &(&u * &ps) * &u.adjoint();

    let mut out = Vec::new();
    for x in 0..dim {
        for z in 0..dim {
            let s = PauliString { n, x, z };
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..dim {
                // Tr(P_k M) = Σ_j P_k[j, j⊕x] M[j⊕x, j]
                acc += string_element(&s, j, j ^ x) * m[(j ^ x, j)];
            }
            let alpha = acc / dim as f64;
            if alpha.norm() > PAULI_CUTOFF {
                out.push((s, alpha.re));
            }
        }
    }
    Ok(out)
}

/// ⟨i|P|j⟩ for j = i ⊕ x.
fn string_element(s: &PauliString, i: usize, j: usize) -> C64 {
    debug_assert_eq!(i ^ j, s.x);
    let ys = (s.x & s.z).count_ones();
    let sign = if (j & s.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    C64::new(0.0, 1.0).powu(ys) * sign
}
