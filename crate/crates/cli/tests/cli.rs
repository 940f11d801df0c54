use std::path::Path;
use std::process::{Command, Output};

use clap::CommandFactory;
use quorum_cli::{Cli, FileConfig, GlobalArgs, Settings, BackendKind, DEFAULT_SEED, EXPERIMENT_RESULT};

fn quorum(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quorum"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OPENAI_API_KEY")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_documents_every_flag() {
    let root = Cli::command();
    let dir = tempfile::tempdir().unwrap();
    let mut commands = vec![(Vec::<String>::new(), &root)];
    commands.extend(root.get_subcommands().map(|s| (vec![s.get_name().to_string()], s)));
    for (path, cmd) in commands {
        let mut args: Vec<&str> = path.iter().map(String::as_str).collect();
        args.push("--help");
        let out = quorum(&args, dir.path());
        assert_eq!(out.status.code(), Some(0));
        let help = stdout(&out);
        for arg in cmd.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{path:?} help lacks --{long}");
                if long != "help" && long != "version" {
                    assert!(arg.get_help().is_some(), "--{long} has no description");
                }
            }
        }
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(quorum(&["run", "--no-such-flag"], dir.path()).status.code(), Some(1));
    assert_eq!(quorum(&["experiment", "no-such-plan"], dir.path()).status.code(), Some(1));
    assert_eq!(quorum(&["--backend", "replay", "run"], dir.path()).status.code(), Some(1));
    assert_eq!(quorum(&["report"], dir.path()).status.code(), Some(1));
    assert_eq!(quorum(&["run", "-n", "3", "-k", "3"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(quorum(&["validate", "missing.json"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("junk.json"), "{").unwrap();
    assert_eq!(quorum(&["validate", "junk.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn gen_data_then_validate_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = quorum(&["gen-data", "--seed", "3", "-o", "company.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("seed: 3"));
    let validated = quorum(&["validate", "company.json"], dir.path());
    assert_eq!(validated.status.code(), Some(0));

    let run = quorum(&["run", "--company", "company.json", "-n", "4", "-o", "one"], dir.path());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = stdout(&run);
    assert!(text.contains("backend: mock"));
    assert!(text.contains("mode: full"));
    assert!(dir.path().join("one").join(quorum_cli::SESSION_RESULT).exists());
}

#[test]
fn experiment_then_report_from_results_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let run = quorum(
        &["experiment", "baselines", "--scenarios", "2", "-o", "res", "--width", "2"],
        dir.path(),
    );
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains(&format!("seed: {DEFAULT_SEED}")));
    let result = format!("res/{EXPERIMENT_RESULT}");
    assert_eq!(quorum(&["validate", &result], dir.path()).status.code(), Some(0));

    let report = quorum(&["report", &result, "-o", "rep"], dir.path());
    assert_eq!(report.status.code(), Some(0), "{}", String::from_utf8_lossy(&report.stderr));
    let again = quorum(&["report", "--from-tables", "rep/tables", "-o", "rep2"], dir.path());
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
    let a = std::fs::read(dir.path().join("rep/summary.json")).unwrap();
    let b = std::fs::read(dir.path().join("rep2/summary.json")).unwrap();
    assert_eq!(a, b);
    let summary = std::fs::read_to_string(dir.path().join("rep/tables/summary.csv")).unwrap();
    assert!(summary.contains("n/a"));
}

#[test]
fn flags_override_config_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quorum.toml");
    std::fs::write(&path, "seed = 11\nwidth = 3\n[live]\nmodel = \"m-file\"\n").unwrap();
    let file = FileConfig::load(&path).unwrap();
    let flags = |seed: Option<u64>| GlobalArgs {
        config: None,
        seed,
        backend: None,
        transcripts: None,
        width: None,
        out: None,
        model: None,
        base_url: None,
        verbose: 0,
    };
    let s = Settings::resolve(&flags(None), file.clone());
    assert_eq!((s.seed, s.width, s.backend), (11, 3, BackendKind::Mock));
    assert_eq!(s.live.model, "m-file");
    assert!(s.seed_given);
    let s = Settings::resolve(&flags(Some(5)), file);
    assert_eq!(s.seed, 5);
    let s = Settings::resolve(&flags(None), FileConfig::default());
    assert_eq!(s.seed, DEFAULT_SEED);
    assert!(!s.seed_given);

    std::fs::write(&path, "colour = \"red\"\n").unwrap();
    assert!(FileConfig::load(&path).is_err());
}
