use std::path::PathBuf;

use proptest::prelude::*;
use tmev_core::corpus_gen;
use tmev_core::lang::{parse, pretty_print, Kind, LangError};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "tok"))
        .collect();
    files.sort();
    files.into_iter().map(|p| (p.display().to_string(), std::fs::read_to_string(&p).unwrap())).collect()
}

#[test]
fn staged_rebase_shape() {
    let src = std::fs::read_to_string(corpus_dir().join("staged_rebase.tok")).unwrap();
    let c = &parse(&src).unwrap().contracts[0];
    assert_eq!(c.name, "TokenTY");
    let vars: Vec<_> = c.state_vars.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(vars, ["balance", "ts", "pause", "t1"]);
    assert_eq!(c.state_vars[0].kind, Kind::MapAddressToUint);
    let fns: Vec<_> = c.functions.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(fns, ["balanceOf", "rebase1", "rebase2", "pauseTransfer"]);
}

#[test]
fn empty_contract() {
    let u = parse("contract E {}").unwrap();
    assert!(u.contracts[0].state_vars.is_empty());
    assert!(u.contracts[0].functions.is_empty());
    let text = pretty_print(&u);
    assert!(text.starts_with("contract E {\n") && text.trim_end().ends_with('}'));
}

#[test]
fn return_in_non_returning_function_is_invalid() {
    assert!(matches!(parse("contract X { f(){ return } }"), Err(LangError::Validation(_))));
}

#[test]
fn invariant_violations_are_validation_errors() {
    for src in [
        "contract A {} contract A {}",
        "contract A { uint x; uint x; }",
        "contract A { f() {} f() {} }",
        "contract A { f(uint a, uint a) {} }",
        "contract A { g() returns (uint) { if (true) { return 1; } } }",
        "contract A { f() { y = 1; } }",
        "contract A { mapping(address => uint) m; f() { m = 1; } }",
    ] {
        assert!(matches!(parse(src), Err(LangError::Validation(_))), "{src}");
    }
}

#[test]
fn mapping_prints_canonically() {
    let u = parse("contract M { mapping ( address=>uint ) bal; }").unwrap();
    assert!(pretty_print(&u).contains("mapping(address => uint) bal;"));
}

#[test]
fn corpus_round_trips() {
    for (name, src) in corpus() {
        let u = parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse(&pretty_print(&u)).unwrap_or_else(|e| panic!("{name} reprint: {e}"));
        assert_eq!(u, again, "{name}");
    }
}

#[test]
fn parsing_is_deterministic() {
    for (_, src) in corpus() {
        assert_eq!(parse(&src), parse(&src));
    }
}

#[test]
fn syntax_errors_point_at_the_offending_token() {
    let cases = [
        ("contract A {\n    uint x = ;\n}", 2, 14),
        ("contract A {\n    f( {\n    }\n}", 2, 8),
        ("contract A {\n    f() {\n        x += ;\n    }\n}", 3, 14),
        ("contract {}", 1, 10),
        ("contract A {\n  uint x = 1 2;\n}", 2, 14),
    ];
    for (src, line, col) in cases {
        match parse(src) {
            Err(LangError::Syntax { line: l, col: c, .. }) => assert_eq!((l, c), (line, col), "{src:?}"),
            other => panic!("{src:?}: {other:?}"),
        }
    }
}

/// Character at a 1-based line/column, or `None` past the end of input.
fn char_at(src: &str, line: usize, col: usize) -> Option<char> {
    src.lines().nth(line - 1).and_then(|l| l.chars().nth(col - 1))
}

/// Byte ranges covered by `//` and `/* */` comments.
fn in_comment(src: &str, at: usize) -> bool {
    let b = src.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i..].starts_with(b"//") {
            let end = src[i..].find('\n').map_or(b.len(), |n| i + n);
            if (i..end).contains(&at) {
                return true;
            }
            i = end;
        } else if b[i..].starts_with(b"/*") {
            let end = src[i + 2..].find("*/").map_or(b.len(), |n| i + n + 4);
            if (i..end).contains(&at) {
                return true;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    false
}

fn line_col(src: &str, at: usize) -> (usize, usize) {
    let before = &src[..at];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().unwrap().chars().count() + 1;
    (line, col)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_contracts_round_trip(seed in any::<u64>()) {
        for g in corpus_gen::generate(seed, 4) {
            let u = parse(&g.source).unwrap();
            prop_assert_eq!(&parse(&pretty_print(&u)).unwrap(), &u);
        }
    }

    #[test]
    fn stray_character_is_located_exactly(file in 0usize..13, frac in 0.0f64..1.0) {
        let all = corpus();
        let (_, src) = &all[file % all.len()];
        let mut at = (frac * src.len() as f64) as usize;
        while !src.is_char_boundary(at) {
            at -= 1;
        }
        let mut broken = src.clone();
        broken.insert(at, '#');
        if in_comment(&broken, at) {
            prop_assert!(parse(&broken).is_ok());
        } else {
            match parse(&broken) {
                Err(LangError::Syntax { line, col, .. }) => prop_assert_eq!((line, col), line_col(&broken, at)),
                other => prop_assert!(false, "expected a syntax error, got {:?}", other),
            }
        }
    }

    #[test]
    fn dropped_token_errors_land_on_a_token(file in 0usize..13, frac in 0.0f64..1.0) {
        let all = corpus();
        let (_, src) = &all[file % all.len()];
        let starts: Vec<usize> = src
            .char_indices()
            .filter(|&(i, c)| !c.is_whitespace() && !in_comment(src, i) && (i == 0 || src[..i].ends_with(char::is_whitespace)))
            .map(|(i, _)| i)
            .collect();
        let at = starts[((frac * starts.len() as f64) as usize).min(starts.len() - 1)];
        let end = src[at..].find(char::is_whitespace).map_or(src.len(), |n| at + n);
        let mut broken = src.clone();
        broken.replace_range(at..end, &" ".repeat(end - at));
        if let Err(LangError::Syntax { line, col, .. }) = parse(&broken) {
            match char_at(&broken, line, col) {
                Some(c) => prop_assert!(!c.is_whitespace(), "error at whitespace {}:{}", line, col),
                None => {
                    let total = broken.lines().count().max(1);
                    prop_assert!(line >= total, "error past a line end at {}:{}", line, col);
                }
            }
        }
    }
}
