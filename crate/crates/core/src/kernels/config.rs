use std::fmt;
use std::str::FromStr;

use crate::feature::{BinaryOp, ReduceOp};
use crate::{Error, Result};

/// Graph entity a feature operand or output is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    /// Source node of an edge.
    U,
    /// Destination node of an edge.
    V,
    /// The edge itself.
    E,
}

impl Operand {
    pub fn token(self) -> &'static str {
        match self {
            Operand::U => "u",
            Operand::V => "v",
            Operand::E => "e",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "u" => Some(Operand::U),
            "v" => Some(Operand::V),
            "e" => Some(Operand::E),
            _ => None,
        }
    }

    pub fn is_node(self) -> bool {
        self != Operand::E
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One aggregation: the message `lhs binary rhs` is computed on every edge
/// and reduced into `out`.
///
/// Edge outputs receive exactly one message each, so for `out == E` the
/// message is stored directly whatever the reduce operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BrConfig {
    pub lhs: Operand,
    pub rhs: Option<Operand>,
    pub binary: BinaryOp,
    pub reduce: ReduceOp,
    pub out: Operand,
}

impl BrConfig {
    pub fn new(lhs: Operand, rhs: Option<Operand>, binary: BinaryOp, reduce: ReduceOp, out: Operand) -> Result<Self> {
        let cfg = BrConfig { lhs, rhs, binary, reduce, out };
        cfg.check()?;
        Ok(cfg)
    }

    /// Copy-Reduce of `source` features into destination nodes.
    pub fn copy(source: Operand, reduce: ReduceOp) -> Self {
        BrConfig { lhs: source, rhs: None, binary: BinaryOp::CopyLhs, reduce, out: Operand::V }
    }

    pub fn check(&self) -> Result<()> {
        match self.rhs {
            Some(r) if r == self.lhs => Err(Error::Config(format!("{self}: both operands are {}", self.lhs))),
            Some(_) if self.binary == BinaryOp::CopyLhs => {
                Err(Error::Config(format!("copy takes a single operand, got a right operand {:?}", self.rhs)))
            }
            None if self.binary != BinaryOp::CopyLhs => {
                Err(Error::Config(format!("{} needs a right operand", self.binary)))
            }
            _ => Ok(()),
        }
    }

    pub fn is_copy_reduce(&self) -> bool {
        self.rhs.is_none()
    }

    pub fn name(&self) -> String {
        match self.rhs {
            None => format!("{}_copy_{}_{}", self.lhs, self.reduce, self.out),
            Some(r) => format!("{}_{}_{}_{}_{}", self.lhs, self.binary, r, self.reduce, self.out),
        }
    }
}

impl fmt::Display for BrConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for BrConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        named_config(s)
    }
}

/// Parses names of the form `x_op_y_red_z` (Binary-Reduce) or
/// `x_copy_red_v` with `x` in {u, e} (Copy-Reduce).
pub fn named_config(name: &str) -> Result<BrConfig> {
    let bad = |why: &str| Error::Config(format!("{name:?}: {why}"));
    let operand = |t: &str| Operand::from_token(t).ok_or_else(|| bad(&format!("unknown operand {t:?}")));
    let reduce = |t: &str| ReduceOp::from_token(t).ok_or_else(|| bad(&format!("unknown reduce operator {t:?}")));

    let parts: Vec<&str> = name.split('_').collect();
    match parts.as_slice() {
        [x, "copy", red, z] => {
            let lhs = operand(x)?;
            if lhs == Operand::V {
                return Err(bad("copy source must be u or e"));
            }
            if operand(z)? != Operand::V {
                return Err(bad("copy destination must be v"));
            }
            BrConfig::new(lhs, None, BinaryOp::CopyLhs, reduce(red)?, Operand::V)
        }
        [x, op, y, red, z] => {
            let binary = match BinaryOp::from_token(op) {
                Some(BinaryOp::CopyLhs) | None => return Err(bad(&format!("unknown binary operator {op:?}"))),
                Some(b) => b,
            };
            BrConfig::new(operand(x)?, Some(operand(y)?), binary, reduce(red)?, operand(z)?)
                .map_err(|e| bad(&e.to_string()))
        }
        _ => Err(bad("expected x_op_y_reduce_z or x_copy_reduce_v")),
    }
}

/// Every distinct configuration used by the profiled GNN applications (GCN,
/// GraphSAGE, GAT, GC-MC and friends).
pub const APPLICATION_CONFIGS: [&str; 9] = [
    "u_copy_add_v",
    "u_dot_v_add_e",
    "u_mul_e_add_v",
    "e_copy_add_v",
    "e_copy_max_v",
    "u_add_v_copy_e",
    "e_sub_v_copy_e",
    "e_div_v_copy_e",
    "v_mul_e_copy_e",
];

/// Operand/output layouts of the built-in Binary-Reduce family.
pub const BR_LAYOUTS: [(Operand, Operand, Operand); 12] = {
    use Operand::*;
    [
        (U, V, V),
        (V, U, V),
        (U, V, E),
        (V, U, E),
        (U, E, V),
        (E, U, V),
        (U, E, E),
        (E, U, E),
        (V, E, V),
        (E, V, V),
        (V, E, E),
        (E, V, E),
    ]
};

/// Every built-in configuration: the twelve Binary-Reduce layouts and the two
/// Copy-Reduce sources, crossed with all operators.
pub fn builtin_configs() -> Vec<BrConfig> {
    let mut out = Vec::new();
    for (lhs, rhs, dst) in BR_LAYOUTS {
        for binary in BinaryOp::ALL.into_iter().filter(|&b| b != BinaryOp::CopyLhs) {
            for reduce in ReduceOp::ALL {
                out.push(BrConfig { lhs, rhs: Some(rhs), binary, reduce, out: dst });
            }
        }
    }
    for src in [Operand::U, Operand::E] {
        for reduce in ReduceOp::ALL {
            out.push(BrConfig::copy(src, reduce));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_copy_reduce() {
        let cfg = named_config("u_copy_add_v").unwrap();
        assert_eq!(
            cfg,
            BrConfig { lhs: Operand::U, rhs: None, binary: BinaryOp::CopyLhs, reduce: ReduceOp::Sum, out: Operand::V }
        );
        assert_eq!(named_config("e_copy_max_v").unwrap(), BrConfig::copy(Operand::E, ReduceOp::Max));
    }

    #[test]
    fn parses_binary_reduce() {
        let cfg = named_config("e_sub_v_copy_e").unwrap();
        assert_eq!(
            cfg,
            BrConfig {
                lhs: Operand::E,
                rhs: Some(Operand::V),
                binary: BinaryOp::Sub,
                reduce: ReduceOp::CopyLast,
                out: Operand::E
            }
        );
        let cfg = named_config("u_dot_v_add_e").unwrap();
        assert_eq!((cfg.binary, cfg.reduce, cfg.out), (BinaryOp::Dot, ReduceOp::Sum, Operand::E));
    }

    #[test]
    fn rejects_bad_names() {
        for name in [
            "u_mul_u_add_v",
            "v_copy_add_v",
            "u_copy_add_e",
            "u_copy_v_add_v",
            "u_pow_v_add_v",
            "u_add_v",
            "",
            "x_add_v_add_v",
            "u_add_v_div_v",
        ] {
            assert!(matches!(named_config(name), Err(Error::Config(_))), "{name}");
        }
    }

    #[test]
    fn every_builtin_name_round_trips() {
        let all = builtin_configs();
        assert_eq!(all.len(), 12 * 5 * 5 + 2 * 5);
        for cfg in all {
            assert_eq!(named_config(&cfg.name()).unwrap(), cfg);
        }
        for name in APPLICATION_CONFIGS {
            assert_eq!(named_config(name).unwrap().name(), name);
        }
    }
}
