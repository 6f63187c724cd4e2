use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    B0,
    B1,
    #[serde(rename = "D1_plus")]
    D1Plus,
    #[serde(rename = "D1_minus")]
    D1Minus,
    #[serde(rename = "D2_plus")]
    D2Plus,
    #[serde(rename = "D2_minus")]
    D2Minus,
    #[serde(rename = "B2_plus")]
    B2Plus,
    #[serde(rename = "B2_minus")]
    B2Minus,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::B0,
        TemplateId::B1,
        TemplateId::D1Plus,
        TemplateId::D1Minus,
        TemplateId::D2Plus,
        TemplateId::D2Minus,
        TemplateId::B2Plus,
        TemplateId::B2Minus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::B0 => "B0",
            TemplateId::B1 => "B1",
            TemplateId::D1Plus => "D1_plus",
            TemplateId::D1Minus => "D1_minus",
            TemplateId::D2Plus => "D2_plus",
            TemplateId::D2Minus => "D2_minus",
            TemplateId::B2Plus => "B2_plus",
            TemplateId::B2Minus => "B2_minus",
        }
    }

    pub fn parse(s: &str) -> Option<TemplateId> {
        TemplateId::ALL.into_iter().find(|t| t.as_str().eq_ignore_ascii_case(s))
    }

    /// Direction of supply change the template exploits; `None` for the
    /// baselines, which take any victim.
    pub fn sign(self) -> Option<TscSign> {
        match self {
            TemplateId::D1Plus | TemplateId::D2Plus | TemplateId::B2Plus => Some(TscSign::Positive),
            TemplateId::D1Minus | TemplateId::D2Minus | TemplateId::B2Minus => Some(TscSign::Negative),
            TemplateId::B0 | TemplateId::B1 => None,
        }
    }

    /// Does the template route a leg through the insensitive pool `q`?
    pub fn needs_q(self) -> bool {
        !matches!(self, TemplateId::B0 | TemplateId::B1)
    }

    /// Does the template route a leg through pool `p`?
    pub fn needs_p(self) -> bool {
        !matches!(self, TemplateId::D2Plus | TemplateId::D2Minus)
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TscSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Searcher,
    Victim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Venue {
    PoolP,
    PoolQ,
    /// Z/Y pool of the extended negative-TSC sandwiches.
    PoolZ,
    Token,
}

impl Venue {
    pub fn slot(self) -> &'static str {
        match self {
            Venue::PoolP => "p",
            Venue::PoolQ => "q",
            Venue::PoolZ => "z",
            Venue::Token => "token",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    SwapXy,
    SwapYx,
    TscCall,
    LendBorrow,
    LendRepay,
    #[serde(rename = "addL")]
    AddL,
    #[serde(rename = "removeL")]
    RemoveL,
}

impl Action {
    /// The concrete action on a lending venue, where X to Y is a borrow.
    pub fn on_lending(self) -> Action {
        match self {
            Action::SwapXy => Action::LendBorrow,
            Action::SwapYx => Action::LendRepay,
            a => a,
        }
    }

    pub fn function(self) -> &'static str {
        match self {
            Action::SwapXy => "swap_xy",
            Action::SwapYx => "swap_yx",
            Action::LendBorrow => "borrow",
            Action::LendRepay => "repay",
            Action::AddL => "add_liquidity",
            Action::RemoveL => "remove_liquidity",
            Action::TscCall => "tsc_call",
        }
    }
}

/// How a searcher leg's input amount is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amount {
    /// The solver's free variable.
    Free,
    /// Everything the searcher holds of the leg's input token above its
    /// initial balance.
    Acquired,
    /// Smallest input that brings the searcher's Y back to its initial balance.
    RestoreY,
    /// Set by the observed victim transaction.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub actor: Actor,
    pub venue: Venue,
    pub action: Action,
    pub amount: Amount,
}

const fn s(venue: Venue, action: Action, amount: Amount) -> Leg {
    Leg { actor: Actor::Searcher, venue, action, amount }
}

const TSC: Leg = Leg { actor: Actor::Victim, venue: Venue::Token, action: Action::TscCall, amount: Amount::Observed };
const WHALE: Leg = Leg { actor: Actor::Victim, venue: Venue::PoolP, action: Action::SwapXy, amount: Amount::Observed };

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: TemplateId,
    pub legs: Vec<Leg>,
    /// Full leg list of the variant where the searcher starts from a third
    /// token Z.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extension_legs: Option<Vec<Leg>>,
}

impl Template {
    pub fn new(id: TemplateId) -> Template {
        use Action::*;
        use Amount::*;
        use Venue::*;
        let (legs, extension_legs) = match id {
            TemplateId::B0 => (vec![s(PoolP, SwapXy, Free), WHALE, s(PoolP, SwapYx, Acquired)], None),
            TemplateId::B1 => (vec![s(PoolP, SwapXy, Free), TSC, s(PoolP, SwapYx, Acquired)], None),
            TemplateId::D1Plus => (vec![s(PoolP, SwapXy, Free), TSC, s(PoolQ, SwapYx, Acquired)], None),
            TemplateId::D2Plus => (vec![s(PoolQ, SwapXy, Free), TSC, s(PoolQ, SwapYx, Acquired)], None),
            TemplateId::D1Minus | TemplateId::D2Minus => {
                let first = if id == TemplateId::D1Minus { PoolP } else { PoolQ };
                (
                    vec![s(first, SwapYx, Free), TSC, s(PoolQ, SwapXy, RestoreY)],
                    Some(vec![
                        s(PoolZ, SwapXy, Free),
                        s(first, SwapYx, Acquired),
                        TSC,
                        s(PoolQ, SwapXy, Acquired),
                        s(PoolZ, SwapYx, Acquired),
                    ]),
                )
            }
            TemplateId::B2Plus => (vec![TSC, s(PoolP, SwapXy, Free), s(PoolQ, SwapYx, Acquired)], None),
            TemplateId::B2Minus => (vec![TSC, s(PoolQ, SwapXy, Free), s(PoolP, SwapYx, Acquired)], None),
        };
        Template { id, legs, extension_legs }
    }

    pub fn legs(&self, extended: bool) -> &[Leg] {
        match (&self.extension_legs, extended) {
            (Some(ext), true) => ext,
            _ => &self.legs,
        }
    }
}

/// Every template in the catalog.
pub fn catalog() -> Vec<Template> {
    TemplateId::ALL.into_iter().map(Template::new).collect()
}
