//! Layered byte circuits and their genetic operators.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported input vector and layer width (connector masks are u64).
pub const MAX_FAN_IN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeFn {
    /// First connected predecessor, or 0 without connectors.
    Nop,
    /// The node's argument byte.
    Const,
    /// Complement of the first connected predecessor.
    Not,
    And,
    Or,
    Xor,
    /// First connected predecessor rotated left by `arg & 7`.
    RotateLeft,
}

impl NodeFn {
    pub const ALL: [NodeFn; 7] = [
        NodeFn::Nop,
        NodeFn::Const,
        NodeFn::Not,
        NodeFn::And,
        NodeFn::Or,
        NodeFn::Xor,
        NodeFn::RotateLeft,
    ];

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..Self::ALL.len())]
    }

    fn apply(self, arg: u8, inputs: impl Iterator<Item = u8>) -> u8 {
        let mut inputs = inputs.peekable();
        match self {
            NodeFn::Const => arg,
            NodeFn::Nop => inputs.next().unwrap_or(0),
            NodeFn::Not => !inputs.next().unwrap_or(0),
            NodeFn::RotateLeft => inputs.next().unwrap_or(0).rotate_left((arg & 7) as u32),
            NodeFn::And => {
                if inputs.peek().is_none() {
                    0
                } else {
                    inputs.fold(0xff, |a, b| a & b)
                }
            }
            NodeFn::Or => inputs.fold(0, |a, b| a | b),
            NodeFn::Xor => inputs.fold(0, |a, b| a ^ b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub func: NodeFn,
    /// Bit `k` set: reads predecessor `k` of the previous layer (layer 0
    /// reads input bytes).
    pub connectors: u64,
    pub arg: u8,
}

impl Node {
    pub fn new(func: NodeFn, connectors: u64, arg: u8) -> Self {
        Self {
            func,
            connectors,
            arg,
        }
    }
}

fn set_bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |k| mask >> k & 1 == 1)
}

fn fan_in_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A feed-forward circuit: `layers[l][w]`, output = node 0 of the last layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitGenome {
    pub input_len: usize,
    pub layers: Vec<Vec<Node>>,
}

impl CircuitGenome {
    /// Random circuit with one or two connectors per node.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        input_len: usize,
        layers: usize,
        width: usize,
    ) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let fan_in = if l == 0 { input_len } else { width };
                (0..width)
                    .map(|_| {
                        let mut connectors = 1u64 << rng.random_range(0..fan_in);
                        if rng.random_bool(0.5) {
                            connectors |= 1u64 << rng.random_range(0..fan_in);
                        }
                        Node::new(NodeFn::random(rng), connectors, rng.random())
                    })
                    .collect()
            })
            .collect();
        Self { input_len, layers }
    }

    /// All-NOP circuit wired so that node `w` reads predecessor `w`; its
    /// output is input byte 0.
    pub fn pass_through(input_len: usize, layers: usize, width: usize) -> Self {
        let layers = (0..layers)
            .map(|_| {
                (0..width)
                    .map(|w| Node::new(NodeFn::Nop, 1u64 << w, 0))
                    .collect()
            })
            .collect();
        Self { input_len, layers }
    }

    pub fn width(&self) -> usize {
        self.layers.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.input_len > MAX_FAN_IN {
            return Err(Error::MalformedGenome(format!(
                "input length {} outside 1..={MAX_FAN_IN}",
                self.input_len
            )));
        }
        if self.layers.is_empty() {
            return Err(Error::MalformedGenome("no layers".into()));
        }
        let width = self.width();
        if width == 0 || width > MAX_FAN_IN {
            return Err(Error::MalformedGenome(format!("layer width {width}")));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.len() != width {
                return Err(Error::MalformedGenome(format!(
                    "layer {l} has {} nodes",
                    layer.len()
                )));
            }
            let allowed = fan_in_mask(if l == 0 { self.input_len } else { width });
            for (w, node) in layer.iter().enumerate() {
                if node.connectors & !allowed != 0 {
                    return Err(Error::MalformedGenome(format!(
                        "node ({l},{w}) connects outside the previous layer"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reference evaluation, layer by layer.
    pub fn evaluate(&self, input: &[u8]) -> Result<u8> {
        self.validate()?;
        if input.len() != self.input_len {
            return Err(Error::LengthMismatch {
                field: "test vector",
                expected: self.input_len,
                actual: input.len(),
            });
        }
        let mut prev: Vec<u8> = input.to_vec();
        for layer in &self.layers {
            prev = layer
                .iter()
                .map(|n| n.func.apply(n.arg, set_bits(n.connectors).map(|k| prev[k])))
                .collect();
        }
        Ok(prev[0])
    }

    /// Flattens the nodes the output depends on into a straight-line program.
    pub fn compile(&self) -> Result<CompiledCircuit> {
        self.validate()?;
        let width = self.width();
        let depth = self.layers.len();
        // Slot numbering: inputs, then layer l node w at input_len + l*width + w.
        let slot = |l: usize, w: usize| self.input_len + l * width + w;
        let mut live = vec![vec![false; width]; depth];
        live[depth - 1][0] = true;
        for l in (1..depth).rev() {
            for w in 0..width {
                if live[l][w] {
                    let n = &self.layers[l][w];
                    for k in set_bits(uses(n)) {
                        live[l - 1][k] = true;
                    }
                }
            }
        }
        let mut ops = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (w, node) in layer.iter().enumerate() {
                if !live[l][w] {
                    continue;
                }
                let base = if l == 0 { 0 } else { slot(l - 1, 0) };
                let preds: Vec<u16> = set_bits(uses(node)).map(|k| (base + k) as u16).collect();
                ops.push(Op {
                    func: node.func,
                    arg: node.arg,
                    dst: slot(l, w) as u16,
                    preds,
                });
            }
        }
        Ok(CompiledCircuit {
            input_len: self.input_len,
            slots: slot(depth - 1, 0) + 1,
            output: slot(depth - 1, 0),
            ops,
        })
    }

    /// Per-locus mutation: with probability `rate` each node independently
    /// gets a new function, toggles one connector, and gets a new argument.
    pub fn mutate<R: Rng + ?Sized>(&self, rng: &mut R, rate: f64) -> Self {
        let mut child = self.clone();
        if rate <= 0.0 {
            return child;
        }
        let width = self.width();
        for (l, layer) in child.layers.iter_mut().enumerate() {
            let fan_in = if l == 0 { self.input_len } else { width };
            for node in layer.iter_mut() {
                if rng.random_bool(rate) {
                    node.func = NodeFn::random(rng);
                }
                if rng.random_bool(rate) {
                    node.connectors ^= 1u64 << rng.random_range(0..fan_in);
                }
                if rng.random_bool(rate) {
                    node.arg = rng.random();
                }
            }
        }
        child
    }

    /// Layer-aligned one-point crossover.
    pub fn crossover<R: Rng + ?Sized>(&self, other: &Self, rng: &mut R) -> Self {
        debug_assert_eq!(self.layers.len(), other.layers.len());
        let cut = rng.random_range(0..=self.layers.len());
        let layers = self.layers[..cut]
            .iter()
            .chain(&other.layers[cut..])
            .cloned()
            .collect();
        Self {
            input_len: self.input_len,
            layers,
        }
    }
}

/// Connectors that influence a node's value.
fn uses(node: &Node) -> u64 {
    match node.func {
        NodeFn::Const => 0,
        NodeFn::Nop | NodeFn::Not | NodeFn::RotateLeft => {
            if node.connectors == 0 {
                0
            } else {
                1u64 << node.connectors.trailing_zeros()
            }
        }
        NodeFn::And | NodeFn::Or | NodeFn::Xor => node.connectors,
    }
}

impl fmt::Display for CircuitGenome {
    /// One line per layer: `FUNC(arg)[connector indices]` per node.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_len {}", self.input_len)?;
        for (l, layer) in self.layers.iter().enumerate() {
            write!(f, "L{l}:")?;
            for node in layer {
                let conns: Vec<String> = set_bits(node.connectors).map(|k| k.to_string()).collect();
                write!(f, " {:?}({})[{}]", node.func, node.arg, conns.join(","))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Op {
    func: NodeFn,
    arg: u8,
    dst: u16,
    preds: Vec<u16>,
}

/// Straight-line form of a genome restricted to live nodes.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    input_len: usize,
    slots: usize,
    output: usize,
    ops: Vec<Op>,
}

impl CompiledCircuit {
    /// Evaluates using `scratch` (resized as needed) to avoid allocation.
    pub fn eval(&self, input: &[u8], scratch: &mut Vec<u8>) -> u8 {
        scratch.resize(self.slots, 0);
        scratch[..self.input_len].copy_from_slice(&input[..self.input_len]);
        for op in &self.ops {
            let v = op
                .func
                .apply(op.arg, op.preds.iter().map(|&p| scratch[p as usize]));
            scratch[op.dst as usize] = v;
        }
        scratch[self.output]
    }

    pub fn live_nodes(&self) -> usize {
        self.ops.len()
    }
}
