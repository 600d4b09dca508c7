use taskdecomp::exec::Execution;
use taskdecomp::fixtures::{fixture_matrix, fixture_text, load_fixture, FIXTURES};
use taskdecomp::scenario::{emit_scenario, parse_scenario};

#[test]
fn golden_table_is_reproduced() {
    let rows = fixture_matrix(Execution::Sequential).unwrap();
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}

#[test]
fn every_fixture_parses_and_round_trips() {
    for (name, _) in FIXTURES {
        let s = load_fixture(name).unwrap();
        let text = emit_scenario(&s);
        assert_eq!(parse_scenario(&text).unwrap(), s, "{name}");
    }
}

#[test]
fn fixtures_match_the_files_on_disk() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (name, _) in FIXTURES {
        let on_disk = std::fs::read_to_string(root.join(format!("{name}.scn"))).unwrap();
        assert_eq!(fixture_text(name), Some(on_disk.as_str()), "{name}");
    }
}

#[test]
fn unknown_fixture_is_an_error() {
    assert!(load_fixture("missing").is_err());
}
