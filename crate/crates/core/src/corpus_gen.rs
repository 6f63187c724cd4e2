//! Seeded generator of corpus-sized TokenLang contracts, used for throughput
//! runs and parser fuzzing. Output depends only on the seed and count.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub name: String,
    pub source: String,
}

/// `n` contracts from `seed`. Every contract parses and validates.
pub fn generate(seed: u64, n: usize) -> Vec<Generated> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| one(&mut rng, i)).collect()
}

const LEDGERS: &[&str] = &["balances", "balance", "shares", "gons", "bal"];
const SCALES: &[&str] = &["index", "scale", "ts", "factor", "rate"];

#[derive(Clone, Copy)]
enum View {
    Direct,
    Scaled,
    Gated,
    Constant,
}

#[derive(Clone, Copy)]
enum Extra {
    Rebase,
    Chain,
    Airdrop,
    Mint,
    Burn,
    Loop,
    Setter,
    Toggle,
}

const EXTRAS: &[Extra] =
    &[Extra::Rebase, Extra::Chain, Extra::Airdrop, Extra::Mint, Extra::Burn, Extra::Loop, Extra::Setter, Extra::Toggle];

fn one(rng: &mut ChaCha8Rng, i: usize) -> Generated {
    let name = format!("Gen{i:04}");
    let ledger = *LEDGERS.choose(rng).expect("nonempty");
    let scale = *SCALES.choose(rng).expect("nonempty");
    let unit = [1u32, 10, 100, 1000][rng.gen_range(0..4)];
    let view = [View::Direct, View::Scaled, View::Gated, View::Constant][rng.gen_range(0..4)];
    let mut extras: Vec<Extra> = EXTRAS.to_vec();
    extras.shuffle(rng);
    extras.truncate(rng.gen_range(1..=3));

    let mut s = String::new();
    let _ = writeln!(s, "contract {name} {{");
    let _ = writeln!(s, "    mapping(address => uint) {ledger};");
    let _ = writeln!(s, "    uint {scale} = {unit};");
    let _ = writeln!(s, "    uint totalSupply = {};", rng.gen_range(1..1_000_000u32));
    let _ = writeln!(s, "    bool paused = {};", rng.gen_bool(0.5));
    let _ = writeln!(s, "    uint pending = 0;");
    let _ = writeln!(s, "    uint cap = 0;");
    s.push('\n');

    let owner = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { "@owner_only " } else { "" };
    let _ = writeln!(s, "    balanceOf(address a) returns (uint) {{");
    match view {
        View::Direct => {
            let _ = writeln!(s, "        return {ledger}[a];");
        }
        View::Scaled => {
            let _ = writeln!(s, "        return {ledger}[a] * {scale} / {unit};");
        }
        View::Gated => {
            let _ = writeln!(s, "        uint u = {ledger}[a];");
            let _ = writeln!(s, "        if (!paused) {{");
            let _ = writeln!(s, "            return u * {scale};");
            let _ = writeln!(s, "        }}");
            let _ = writeln!(s, "        return 0;");
        }
        View::Constant => {
            let _ = writeln!(s, "        return {};", rng.gen_range(0..10_000u32));
        }
    }
    let _ = writeln!(s, "    }}");

    let _ = writeln!(s, "\n    transfer(address to, uint amount) {{");
    if rng.gen_bool(0.2) {
        let _ = writeln!(s, "        uint fee = amount / {};", rng.gen_range(10..200u32));
        let _ = writeln!(s, "        {ledger}[msg.sender] -= amount;");
        let _ = writeln!(s, "        {ledger}[to] += amount - fee;");
    } else {
        let _ = writeln!(s, "        {ledger}[msg.sender] -= amount;");
        let _ = writeln!(s, "        {ledger}[to] += amount;");
    }
    let _ = writeln!(s, "    }}");

    for (k, e) in extras.iter().enumerate() {
        s.push('\n');
        let tag = owner(rng);
        match e {
            Extra::Rebase => {
                let op = ["*=", "+=", "/="][rng.gen_range(0..3)];
                let _ = writeln!(s, "    {tag}rebase{k}(uint t) {{");
                let _ = writeln!(s, "        if (t > 0) {{");
                let _ = writeln!(s, "            {scale} {op} t;");
                let _ = writeln!(s, "        }}");
                let _ = writeln!(s, "    }}");
            }
            Extra::Chain => {
                let _ = writeln!(s, "    {tag}stage{k}(uint t) {{");
                let _ = writeln!(s, "        pending = t;");
                let _ = writeln!(s, "    }}");
                let _ = writeln!(s, "\n    {tag}apply{k}() {{");
                let _ = writeln!(s, "        {scale} += pending;");
                let _ = writeln!(s, "        pending = 0;");
                let _ = writeln!(s, "    }}");
            }
            Extra::Airdrop => {
                let _ = writeln!(s, "    {tag}airdrop{k}(address a, address b, uint n) {{");
                let _ = writeln!(s, "        {ledger}[a] += n;");
                let _ = writeln!(s, "        {ledger}[b] += n;");
                let _ = writeln!(s, "        totalSupply += n * 2;");
                let _ = writeln!(s, "    }}");
            }
            Extra::Mint => {
                let _ = writeln!(s, "    {tag}mint{k}(address a, uint n) {{");
                let _ = writeln!(s, "        {ledger}[a] += n;");
                let _ = writeln!(s, "        totalSupply += n;");
                let _ = writeln!(s, "    }}");
            }
            Extra::Burn => {
                let _ = writeln!(s, "    {tag}burn{k}(uint n) {{");
                let _ = writeln!(s, "        {ledger}[msg.sender] -= n;");
                let _ = writeln!(s, "        totalSupply -= n;");
                let _ = writeln!(s, "    }}");
            }
            Extra::Loop => {
                let _ = writeln!(s, "    {tag}accrue{k}(uint periods) {{");
                let _ = writeln!(s, "        uint i = 0;");
                let _ = writeln!(s, "        while (i < periods) {{");
                let _ = writeln!(s, "            {scale} += {scale} / {};", rng.gen_range(2..50u32));
                let _ = writeln!(s, "            i += 1;");
                let _ = writeln!(s, "        }}");
                let _ = writeln!(s, "    }}");
            }
            Extra::Setter => {
                let _ = writeln!(s, "    {tag}setCap{k}(uint c) {{");
                let _ = writeln!(s, "        cap = c;");
                let _ = writeln!(s, "    }}");
            }
            Extra::Toggle => {
                let _ = writeln!(s, "    {tag}toggle{k}() {{");
                let _ = writeln!(s, "        paused = !paused;");
                let _ = writeln!(s, "    }}");
            }
        }
    }
    s.push_str("}\n");
    Generated { name, source: s }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn generated_contracts_validate() {
        for g in generate(7, 300) {
            parse(&g.source).unwrap_or_else(|e| panic!("{}: {e}\n{}", g.name, g.source));
        }
    }

    #[test]
    fn same_seed_same_output() {
        assert_eq!(generate(3, 20), generate(3, 20));
        assert_ne!(generate(3, 20), generate(4, 20));
    }
}
