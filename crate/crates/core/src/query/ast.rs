use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::lexer::Keyword;
use crate::cmi::Threshold;

/// A value written after `=` in a `GIVEN` list.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
}

/// One `GIVEN` entry: fixed when it carries a value, marginalized otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Given {
    pub var: String,
    pub value: Option<Literal>,
}

/// `MUTUAL INFORMATION OF (..) WITH (..) [GIVEN (..)] [USING n SAMPLES]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MiSpec {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub given: Vec<Given>,
    pub samples: Option<u64>,
}

/// Keeps variables whose posterior probability of `MI(var, target) mi`
/// satisfies `prob`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarFilter {
    pub target: String,
    pub mi: Threshold,
    pub prob: Threshold,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    SimulateMi {
        mi: MiSpec,
        model: String,
    },
    EstimateProbMi {
        mi: MiSpec,
        threshold: Threshold,
        model: String,
    },
    EstimateDepProb {
        i: String,
        j: String,
        model: String,
    },
    SimulateVars {
        variables_of: String,
        filter: Option<VarFilter>,
        model: String,
        limit: u64,
    },
}

/// Writes a name bare when it lexes back as the same identifier, quoted
/// otherwise.
struct Name<'a>(&'a str);

impl fmt::Display for Name<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        let bare = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && Keyword::lookup(s).is_none();
        if bare {
            f.write_str(s)
        } else {
            write!(f, "\"{}\"", s.replace('"', "\"\""))
        }
    }
}

struct List<'a>(&'a [String]);

impl fmt::Display for List<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", Name(v))?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(x) => write!(f, "{x}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

impl fmt::Display for MiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MUTUAL INFORMATION OF {} WITH {}", List(&self.a), List(&self.b))?;
        if !self.given.is_empty() {
            f.write_str(" GIVEN (")?;
            for (i, g) in self.given.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", Name(&g.var))?;
                if let Some(v) = &g.value {
                    write!(f, " = {v}")?;
                }
            }
            f.write_str(")")?;
        }
        if let Some(n) = self.samples {
            write!(f, " USING {n} SAMPLES")?;
        }
        Ok(())
    }
}

struct Cmp(Threshold);

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.0.comparator.symbol(), self.0.value)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::SimulateMi { mi, model } => {
                write!(f, "SIMULATE {mi} FROM MODELS OF {}", Name(model))
            }
            Statement::EstimateProbMi { mi, threshold, model } => write!(
                f,
                "ESTIMATE PROBABILITY OF ({mi} {}) BY MODELS OF {}",
                Cmp(*threshold),
                Name(model)
            ),
            Statement::EstimateDepProb { i, j, model } => write!(
                f,
                "ESTIMATE DEPENDENCE PROBABILITY OF {} WITH {} BY MODELS OF {}",
                Name(i),
                Name(j),
                Name(model)
            ),
            Statement::SimulateVars {
                variables_of,
                filter,
                model,
                limit,
            } => {
                write!(f, "SIMULATE (SELECT * FROM VARIABLES OF {}", Name(variables_of))?;
                if let Some(flt) = filter {
                    write!(
                        f,
                        " WHERE PROBABILITY OF (MUTUAL INFORMATION WITH {} {}) {}",
                        Name(&flt.target),
                        Cmp(flt.mi),
                        Cmp(flt.prob)
                    )?;
                }
                write!(f, ") FROM {} LIMIT {limit}", Name(model))
            }
        }
    }
}
