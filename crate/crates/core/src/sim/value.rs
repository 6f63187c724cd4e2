use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

macro_rules! name_type {
    ($(#[$m:meta])* $t:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $t(pub String);

        impl $t {
            pub fn new(s: impl Into<String>) -> Self {
                $t(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $t {
            fn from(s: &str) -> Self {
                $t(s.to_string())
            }
        }
    };
}

name_type!(
    /// Account name. Pools hold tokens at an address equal to their id.
    Address
);
name_type!(TokenId);
name_type!(PoolId);

impl From<&PoolId> for Address {
    fn from(p: &PoolId) -> Self {
        Address(p.0.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Addr(Address),
}

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Value {
        Value::Int(v.into())
    }

    pub fn addr(a: &str) -> Value {
        Value::Addr(Address::new(a))
    }

    /// Numeric view; booleans read as 0/1.
    pub fn as_int(&self) -> Option<BigInt> {
        match self {
            Value::Int(n) => Some(n.clone()),
            Value::Bool(b) => Some(BigInt::from(*b as u8)),
            Value::Addr(_) => None,
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Int(n) => n.sign() != num_bigint::Sign::NoSign,
            Value::Bool(b) => *b,
            Value::Addr(_) => true,
        }
    }

    /// Parse a textual argument: integers, `true`/`false`, anything else is an
    /// address.
    pub fn parse(s: &str) -> Value {
        if let Ok(n) = s.parse::<BigInt>() {
            return Value::Int(n);
        }
        match s {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => Value::Addr(Address::new(s)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Addr(a) => write!(f, "{a}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Bool(bool),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Text(s) => Value::parse(&s),
            Raw::Int(n) => Value::int(n),
            Raw::Bool(b) => Value::Bool(b),
        })
    }
}
