use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A run of residual units sharing one filter count, written `N_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Container {
    pub filters: usize,
    pub units: usize,
}

/// Where ReLU sits relative to each convolution inside a residual branch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ReluPosition {
    /// `ReLU → conv → ReLU → conv` (pre-activation).
    #[default]
    BeforeConv,
    /// `conv → ReLU → conv → ReLU`.
    AfterConv,
}

/// Network blueprint: containers plus unit hyperparameters.
///
/// Textual form is `N[_k](,N[_k])*` optionally wrapped in parentheses and
/// followed by `;key=value` flags (`convs`, `relu`, `bn`, `head`, `tail`,
/// `proj`). [`fmt::Display`] emits the canonical form: every container as
/// `N_k` and only non-default flags, in that fixed order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArchSpec {
    pub containers: Vec<Container>,
    pub convs_per_unit: usize,
    pub relu_position: ReluPosition,
    pub use_bn: bool,
    pub feature_convs: usize,
    pub reconstruction_convs: usize,
    pub projection_kernel: usize,
}

impl ArchSpec {
    pub const DEFAULT_CONVS_PER_UNIT: usize = 2;
    pub const DEFAULT_HEAD: usize = 2;
    pub const DEFAULT_TAIL: usize = 2;
    pub const DEFAULT_PROJECTION_KERNEL: usize = 1;

    pub fn new(containers: Vec<Container>) -> Self {
        ArchSpec {
            containers,
            convs_per_unit: Self::DEFAULT_CONVS_PER_UNIT,
            relu_position: ReluPosition::default(),
            use_bn: false,
            feature_convs: Self::DEFAULT_HEAD,
            reconstruction_convs: Self::DEFAULT_TAIL,
            projection_kernel: Self::DEFAULT_PROJECTION_KERNEL,
        }
    }

    /// Containers as `(filters, units)` pairs with default unit settings.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let spec = ArchSpec::new(
            pairs
                .iter()
                .map(|&(filters, units)| Container { filters, units })
                .collect(),
        );
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::Usage(format!("invalid architecture: {message}")));
        if self.containers.is_empty() {
            return bad("no containers".into());
        }
        for (i, c) in self.containers.iter().enumerate() {
            if c.filters == 0 || c.units == 0 {
                return bad(format!("container {i} has zero filters or units"));
            }
        }
        if !(2..=3).contains(&self.convs_per_unit) {
            return bad(format!("convs per unit must be 2 or 3, got {}", self.convs_per_unit));
        }
        if self.feature_convs == 0 || self.reconstruction_convs == 0 {
            return bad("head and tail need at least one convolution each".into());
        }
        if self.projection_kernel != 1 && self.projection_kernel != 3 {
            return bad(format!("projection kernel must be 1 or 3, got {}", self.projection_kernel));
        }
        Ok(())
    }

    pub fn total_units(&self) -> usize {
        self.containers.iter().map(|c| c.units).sum()
    }

    /// Convolution count along the main path; projection shortcuts excluded.
    pub fn depth(&self) -> usize {
        self.feature_convs + self.total_units() * self.convs_per_unit + self.reconstruction_convs
    }

    pub fn first_width(&self) -> usize {
        self.containers[0].filters
    }

    pub fn last_width(&self) -> usize {
        self.containers[self.containers.len() - 1].filters
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.containers.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}_{}", c.filters, c.units)?;
        }
        if self.convs_per_unit != Self::DEFAULT_CONVS_PER_UNIT {
            write!(f, ";convs={}", self.convs_per_unit)?;
        }
        if self.relu_position == ReluPosition::AfterConv {
            f.write_str(";relu=after")?;
        }
        if self.use_bn {
            f.write_str(";bn=1")?;
        }
        if self.feature_convs != Self::DEFAULT_HEAD {
            write!(f, ";head={}", self.feature_convs)?;
        }
        if self.reconstruction_convs != Self::DEFAULT_TAIL {
            write!(f, ";tail={}", self.reconstruction_convs)?;
        }
        if self.projection_kernel != Self::DEFAULT_PROJECTION_KERNEL {
            write!(f, ";proj={}", self.projection_kernel)?;
        }
        Ok(())
    }
}

impl FromStr for ArchSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_arch(s)
    }
}

fn parse_error<T>(position: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        position,
        message: message.into(),
    })
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn count(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            let found = self.peek().map_or("end of input".to_string(), |c| format!("'{c}'"));
            return parse_error(start, format!("expected {what}, found {found}"));
        }
        match self.text[start..self.pos].parse::<usize>() {
            Ok(v) => Ok((v, start)),
            Err(_) => parse_error(start, format!("{what} out of range")),
        }
    }

    fn word(&mut self) -> (&'a str, usize) {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        (&self.text[start..self.pos], start)
    }
}

/// Parse container notation such as `16_3,32_3,64_3` or `64_8;relu=after`.
pub fn parse_arch(text: &str) -> Result<ArchSpec> {
    let mut cur = Cursor { text, pos: 0 };
    let mut spec = ArchSpec::new(Vec::new());

    let parenthesized = cur.eat('(');
    loop {
        let (filters, at) = cur.count("filter count")?;
        if filters == 0 {
            return parse_error(at, "filter count must be at least 1");
        }
        let units = if cur.eat('_') {
            let (units, at) = cur.count("unit count")?;
            if units == 0 {
                return parse_error(at, "unit count must be at least 1");
            }
            units
        } else {
            1
        };
        spec.containers.push(Container { filters, units });
        if !cur.eat(',') {
            break;
        }
    }
    if parenthesized && !cur.eat(')') {
        cur.skip_ws();
        return parse_error(cur.pos, "expected ')'");
    }

    while cur.eat(';') {
        let (key, key_at) = cur.word();
        if key.is_empty() {
            return parse_error(key_at, "expected flag name");
        }
        if !cur.eat('=') {
            cur.skip_ws();
            return parse_error(cur.pos, format!("expected '=' after flag {key}"));
        }
        let (value, value_at) = cur.word();
        let number = || -> Result<usize> {
            value
                .parse::<usize>()
                .or_else(|_| parse_error(value_at, format!("flag {key} needs an integer, got '{value}'")))
        };
        match key {
            "convs" => {
                spec.convs_per_unit = number()?;
                if !(2..=3).contains(&spec.convs_per_unit) {
                    return parse_error(value_at, "convs per unit must be 2 or 3");
                }
            }
            "relu" => {
                spec.relu_position = match value {
                    "before" => ReluPosition::BeforeConv,
                    "after" => ReluPosition::AfterConv,
                    _ => return parse_error(value_at, "relu must be 'before' or 'after'"),
                }
            }
            "bn" => {
                spec.use_bn = match value {
                    "0" | "off" | "false" => false,
                    "1" | "on" | "true" => true,
                    _ => return parse_error(value_at, "bn must be 0 or 1"),
                }
            }
            "head" | "tail" => {
                let n = number()?;
                if n == 0 {
                    return parse_error(value_at, format!("{key} needs at least one convolution"));
                }
                if key == "head" {
                    spec.feature_convs = n;
                } else {
                    spec.reconstruction_convs = n;
                }
            }
            "proj" => {
                spec.projection_kernel = number()?;
                if spec.projection_kernel != 1 && spec.projection_kernel != 3 {
                    return parse_error(value_at, "projection kernel must be 1 or 3");
                }
            }
            _ => return parse_error(key_at, format!("unknown flag '{key}'")),
        }
    }
    cur.skip_ws();
    if cur.pos != text.len() {
        return parse_error(cur.pos, format!("unexpected '{}'", cur.peek().unwrap_or(' ')));
    }
    Ok(spec)
}
