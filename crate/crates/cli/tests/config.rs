use pruefer_cli::config::{parse_config, Axis, ConfigError, Format, RunConfig};

#[test]
fn empty_document_gives_defaults() {
    let c = parse_config("").unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!(c.grid.points, 200);
    assert_eq!(c.run.realizations, 20);
    assert_eq!(c.sweep.axis, Axis::Length);
    assert_eq!(c.output.format, Format::Csv);
    let (lo, hi) = c.energy_range();
    assert_eq!(lo, -hi);
    assert_eq!(hi, 3.0 * c.lambda() + 2.0);
}

#[test]
fn inverted_grid_is_a_grid_error() {
    let err = parse_config("[grid]\ne_min = 2.0\ne_max = 1.0\n").unwrap_err();
    assert_eq!(err.section(), Some("grid"));
}

#[test]
fn invariant_violations_name_their_section() {
    let cases = [
        ("[model]\nlength = 0\n", "model"),
        ("[grid]\npoints = 1\n", "grid"),
        ("[grid]\ne_max = 1e6\n", "grid"),
        (
            "[quadrature]\npanels = 0\nmethod = \"panels\"\n",
            "quadrature",
        ),
        ("[quadrature]\nbudget = -1.0\n", "quadrature"),
        ("[run]\nrealizations = 0\n", "run"),
        ("[run]\nlog_level = \"loud\"\n", "run"),
        ("[sweep]\nvalues = [8, 4]\n", "sweep"),
    ];
    for (text, section) in cases {
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.section(), Some(section), "{text}: {err}");
    }
}

#[test]
fn unknown_keys_are_rejected_with_a_line() {
    let err = parse_config("[model]\nlength = 8\ncolour = 3\n").unwrap_err();
    match err {
        ConfigError::Parse { line, message } => {
            assert_eq!(line, Some(3));
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("expected a parse error, got {other}"),
    }
    assert!(matches!(
        parse_config("[modle]\n"),
        Err(ConfigError::Parse { .. })
    ));
}

#[test]
fn serialization_round_trips() {
    let text = r#"
[model]
transverse_dim = 2
transverse_radius = 1
length = 12
disorder_width = 2.5
hopping = "random"
seed = 99

[grid]
e_min = -4.0
e_max = 3.0
points = 17

[quadrature]
method = "panels"
e_cut = 80.0
panels = 64
rule = "simpson"
tail = "none"
budget = 0.01

[run]
realizations = 7
log_level = "debug"

[sweep]
axis = "L"
values = [1, 2, 3]

[output]
path = "out.csv"
format = "json"
"#;
    let c = parse_config(text).unwrap();
    assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    let d = RunConfig::default();
    assert_eq!(parse_config(&d.to_toml()).unwrap(), d);
}
