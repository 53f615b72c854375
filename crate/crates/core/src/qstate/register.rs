use serde::{Deserialize, Serialize};

use super::QStateError;

/// A named block of qubits inside a [`RegisterMap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub width: usize,
}

/// Ordered list of named registers describing a multi-qubit system.
///
/// Index convention (big-endian): qubits are numbered left to right in
/// register order, and qubit `q` of a system with `W` qubits lives at bit
/// `W - 1 - q` of the basis-state index. The first-listed register therefore
/// occupies the most significant bits, and within a register the first
/// qubit is its most significant bit. A register holding the value `v`
/// contributes `v << (W - offset - width)` to the index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterMap {
    registers: Vec<Register>,
    total_width: usize,
}

impl RegisterMap {
    pub fn new<S: AsRef<str>>(registers: &[(S, usize)]) -> Result<Self, QStateError> {
        let mut out: Vec<Register> = Vec::with_capacity(registers.len());
        for (name, width) in registers {
            let name = name.as_ref();
            if out.iter().any(|r| r.name == name) {
                return Err(QStateError::DuplicateRegister(name.to_string()));
            }
            if *width == 0 {
                return Err(QStateError::EmptyRegister(name.to_string()));
            }
            out.push(Register { name: name.to_string(), width: *width });
        }
        let total_width: usize = out.iter().map(|r| r.width).sum();
        if total_width == 0 {
            return Err(QStateError::EmptyLayout);
        }
        if total_width > super::MAX_QUBITS {
            return Err(QStateError::TooManyQubits(total_width));
        }
        Ok(Self { registers: out, total_width })
    }

    pub fn single(name: &str, width: usize) -> Result<Self, QStateError> {
        Self::new(&[(name, width)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_width(&self) -> usize {
        self.total_width
    }

    pub fn dim(&self) -> usize {
        1usize << self.total_width
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    /// Qubit positions (0 = leftmost) occupied by `name`.
    pub fn qubits_of(&self, name: &str) -> Result<std::ops::Range<usize>, QStateError> {
        let mut offset = 0;
        for r in &self.registers {
            if r.name == name {
                return Ok(offset..offset + r.width);
            }
            offset += r.width;
        }
        Err(QStateError::UnknownRegister(name.to_string()))
    }

    pub fn width_of(&self, name: &str) -> Result<usize, QStateError> {
        self.qubits_of(name).map(|r| r.len())
    }

    /// Concatenated qubit positions of `names`, in the given order.
    pub fn qubits_of_all<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, QStateError> {
        let mut seen: Vec<&str> = Vec::new();
        let mut qubits = Vec::new();
        for n in names {
            let n = n.as_ref();
            if seen.contains(&n) {
                return Err(QStateError::DuplicateRegister(n.to_string()));
            }
            seen.push(n);
            qubits.extend(self.qubits_of(n)?);
        }
        Ok(qubits)
    }

    /// Layout restricted to `names`, in the given order.
    pub fn sublayout<S: AsRef<str>>(&self, names: &[S]) -> Result<RegisterMap, QStateError> {
        let mut regs = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            regs.push((n.to_string(), self.width_of(n)?));
        }
        RegisterMap::new(&regs)
    }

    /// Layout of `self` followed by `other`.
    pub fn concat(&self, other: &RegisterMap) -> Result<RegisterMap, QStateError> {
        let regs: Vec<(String, usize)> = self
            .registers
            .iter()
            .chain(other.registers.iter())
            .map(|r| (r.name.clone(), r.width))
            .collect();
        RegisterMap::new(&regs)
    }

    /// Registers not named in `names`, in layout order.
    pub fn complement<S: AsRef<str>>(&self, names: &[S]) -> Vec<String> {
        self.registers
            .iter()
            .filter(|r| !names.iter().any(|n| n.as_ref() == r.name))
            .map(|r| r.name.clone())
            .collect()
    }

    /// Index bit for qubit position `q`.
    pub(crate) fn bit_of_qubit(&self, q: usize) -> usize {
        self.total_width - 1 - q
    }

    /// Index offsets of every value of the sub-register formed by `qubits`
    /// (first qubit most significant).
    pub(crate) fn scatter_table(&self, qubits: &[usize]) -> Vec<usize> {
        let k = qubits.len();
        (0..1usize << k)
            .map(|sub| {
                qubits.iter().enumerate().fold(0usize, |acc, (j, &q)| {
                    if (sub >> (k - 1 - j)) & 1 == 1 {
                        acc | (1 << self.bit_of_qubit(q))
                    } else {
                        acc
                    }
                })
            })
            .collect()
    }

    pub(crate) fn qubit_mask(&self, qubits: &[usize]) -> usize {
        qubits.iter().fold(0usize, |acc, &q| acc | (1 << self.bit_of_qubit(q)))
    }
}

/// Split of a layout's registers into Alice's side (A) and Bob's side (B).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl Bipartition {
    pub fn new<S: AsRef<str>>(a: &[S], b: &[S]) -> Self {
        Self {
            a: a.iter().map(|s| s.as_ref().to_string()).collect(),
            b: b.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// Checks that the two sides are nonempty, disjoint and cover `layout`.
    pub fn validate(&self, layout: &RegisterMap) -> Result<(), QStateError> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err(QStateError::BadBipartition("both sides must be nonempty".into()));
        }
        let mut all: Vec<&str> = self.a.iter().chain(self.b.iter()).map(String::as_str).collect();
        for n in &all {
            if !layout.contains(n) {
                return Err(QStateError::UnknownRegister(n.to_string()));
            }
        }
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        if all.len() != before {
            return Err(QStateError::BadBipartition("sides overlap".into()));
        }
        if all.len() != layout.registers().len() {
            return Err(QStateError::BadBipartition("sides do not cover every register".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_big_endian() {
        let m = RegisterMap::new(&[("a", 2), ("b", 1)]).unwrap();
        assert_eq!(m.total_width(), 3);
        assert_eq!(m.qubits_of("a").unwrap(), 0..2);
        assert_eq!(m.qubits_of("b").unwrap(), 2..3);
        // a = 0b10, b = 1 -> index 0b101
        let a_tab = m.scatter_table(&m.qubits_of_all(&["a"]).unwrap());
        let b_tab = m.scatter_table(&m.qubits_of_all(&["b"]).unwrap());
        assert_eq!(a_tab[2] | b_tab[1], 0b101);
    }

    #[test]
    fn duplicate_and_empty_rejected() {
        assert!(matches!(
            RegisterMap::new(&[("a", 1), ("a", 1)]),
            Err(QStateError::DuplicateRegister(_))
        ));
        assert!(RegisterMap::new::<&str>(&[]).is_err());
        assert!(RegisterMap::new(&[("a", 0)]).is_err());
    }

    #[test]
    fn bipartition_validation() {
        let m = RegisterMap::new(&[("a", 1), ("b", 1), ("c", 1)]).unwrap();
        assert!(Bipartition::new(&["a", "c"], &["b"]).validate(&m).is_ok());
        assert!(Bipartition::new(&["a"], &["b"]).validate(&m).is_err());
        assert!(Bipartition::new(&["a", "b"], &["b", "c"]).validate(&m).is_err());
        assert!(Bipartition::new(&[], &["a", "b", "c"]).validate(&m).is_err());
    }
}
