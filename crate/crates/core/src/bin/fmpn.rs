use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fmpn::equiv::{check_timed, check_untimed, Caps};
use fmpn::events::{conform, extract_events_with_states, Conformance, GuardStates};
use fmpn::exec::{replay, run, Trace};
use fmpn::fm::{validate, SimplifyLevel};
use fmpn::io::{
    parse_fm, parse_mapping, parse_pn, parse_pnml, parse_schedule, parse_trace, print_fm,
    print_mapping, render_fm, render_graph, render_net, FmDocument,
};
use fmpn::pn::{reachability, validate_net, Net};
use fmpn::translate::translate_timed;

#[derive(Parser)]
#[command(name = "fmpn", about = "Flowthing machines and Petri nets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a model, net, mapping or schedule file.
    Validate { file: PathBuf },
    /// Run an FM model against a schedule.
    Simulate {
        fm: PathBuf,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Mapping used to place `fire` lines of the schedule.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Reachability graph of a net.
    Reach {
        pn: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Translate a net into an FM model with events and control.
    Translate {
        pn: PathBuf,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
        #[arg(long)]
        map_out: Option<PathBuf>,
    },
    /// Extract the events of a trace and check them against the control graph.
    Events {
        fm: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Compare a net with an FM model.
    Equiv {
        pn: PathBuf,
        fm: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, conflicts_with = "schedules")]
        depth: Option<usize>,
        #[arg(long)]
        schedules: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
    },
    /// Write a DOT drawing of a model or net.
    Render {
        file: PathBuf,
        #[arg(long, default_value = "full")]
        level: String,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Fail(u8, String);

fn usage(msg: impl Into<String>) -> Fail {
    Fail(3, msg.into())
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn ext(path: &Path) -> &str {
    path.extension().and_then(|e| e.to_str()).unwrap_or("")
}

fn load_fm(path: &Path) -> Result<FmDocument, Fail> {
    parse_fm(&read(path)?).map_err(|d| usage(d.with_file(&path.display().to_string()).to_string()))
}

fn load_net(path: &Path) -> Result<Net, Fail> {
    let text = read(path)?;
    let name = path.display().to_string();
    if ext(path) == "pnml" || ext(path) == "xml" {
        parse_pnml(&text).map_err(|e| usage(format!("{name}:{e}")))
    } else {
        parse_pn(&text).map_err(|d| usage(d.with_file(&name).to_string()))
    }
}

fn checked_fm(path: &Path) -> Result<FmDocument, Fail> {
    let doc = load_fm(path)?;
    let report = validate(&doc.model);
    if !report.is_valid() {
        return Err(Fail(1, report.to_string()));
    }
    Ok(doc)
}

fn checked_net(path: &Path) -> Result<Net, Fail> {
    let net = load_net(path)?;
    let report = validate_net(&net);
    if !report.is_valid() {
        return Err(Fail(1, report.to_string()));
    }
    Ok(net)
}

fn cmd_validate(file: &Path) -> Result<u8, Fail> {
    let name = file.display().to_string();
    match ext(file) {
        "fm" => {
            checked_fm(file)?;
        }
        "pn" | "pnml" | "xml" => {
            checked_net(file)?;
        }
        "map" => {
            parse_mapping(&read(file)?).map_err(|d| usage(d.with_file(&name).to_string()))?;
        }
        "sched" => {
            parse_schedule(&read(file)?).map_err(|d| usage(d.with_file(&name).to_string()))?;
        }
        other => return Err(usage(format!("{name}: unknown file type `.{other}`"))),
    }
    eprintln!("{name}: ok");
    Ok(0)
}

fn cmd_simulate(
    fm: &Path,
    schedule: Option<&Path>,
    horizon: u64,
    trace: Option<&Path>,
    map: Option<&Path>,
) -> Result<u8, Fail> {
    let doc = checked_fm(fm)?;
    let sched = match schedule {
        Some(p) => parse_schedule(&read(p)?)
            .map_err(|d| usage(d.with_file(&p.display().to_string()).to_string()))?,
        None => Default::default(),
    };
    let mapping = match map {
        Some(p) => Some(parse_mapping(&read(p)?).map_err(|d| usage(d.to_string()))?),
        None => None,
    };
    let input = sched.to_fm(mapping.as_ref()).map_err(usage)?;
    let t = run(&doc.model, &input, horizon).map_err(|e| Fail(1, e.to_string()))?;
    write_out(trace, &t.to_text())?;
    eprintln!(
        "{} records, final time {}",
        t.records.len(),
        t.final_state.now
    );
    Ok(0)
}

fn cmd_reach(pn: &Path, cap: usize, dot: Option<&Path>) -> Result<u8, Fail> {
    let net = checked_net(pn)?;
    let g = reachability(&net, cap);
    println!(
        "markings {} edges {}{}",
        g.node_count(),
        g.edge_count(),
        if g.truncated { " (truncated)" } else { "" }
    );
    if let Some(p) = dot {
        write_out(Some(p), &render_graph(&g, |m| m.to_string(), |t| t.clone()))?;
    }
    Ok(if g.truncated { 2 } else { 0 })
}

fn cmd_translate(pn: &Path, out: Option<&Path>, map_out: Option<&Path>) -> Result<u8, Fail> {
    let net = checked_net(pn)?;
    let tr = translate_timed(&net).map_err(|e| Fail(1, e.to_string()))?;
    let doc = FmDocument {
        model: tr.model,
        events: tr.events,
        control: Some(tr.control),
    };
    write_out(out, &print_fm(&doc))?;
    if let Some(p) = map_out {
        write_out(Some(p), &print_mapping(&tr.mapping))?;
    }
    Ok(0)
}

fn cmd_events(fm: &Path, trace: &Path) -> Result<u8, Fail> {
    let doc = checked_fm(fm)?;
    let records =
        parse_trace(&read(trace)?).map_err(|e| usage(format!("{}: {e}", trace.display())))?;
    let final_state = replay(&doc.model, &records).map_err(|e| Fail(1, e.to_string()))?;
    let t = Trace {
        records,
        final_state,
    };
    let (etrace, states) = extract_events_with_states(&doc.model, &t, &doc.events)
        .map_err(|e| Fail(1, e.to_string()))?;
    print!("{etrace}");
    let Some(control) = &doc.control else {
        return Ok(0);
    };
    let gs = GuardStates {
        model: &doc.model,
        states: &states,
    };
    match conform(&etrace, control, Some(&gs)) {
        Conformance::Conformant => {
            eprintln!("conformant");
            Ok(0)
        }
        Conformance::Violation { index, expected } => {
            let exp: Vec<&str> = expected.iter().map(String::as_str).collect();
            eprintln!(
                "violation at occurrence {index}: expected one of [{}]",
                exp.join(" ")
            );
            Ok(1)
        }
    }
}

fn cmd_equiv(
    pn: &Path,
    fm: &Path,
    map: &Path,
    depth: Option<usize>,
    schedules: Option<&Path>,
    horizon: u64,
) -> Result<u8, Fail> {
    let net = checked_net(pn)?;
    let doc = checked_fm(fm)?;
    let mapping = parse_mapping(&read(map)?)
        .map_err(|d| usage(d.with_file(&map.display().to_string()).to_string()))?;
    if let Some(dir) = schedules {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| usage(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| ext(p) == "sched")
            .collect();
        files.sort();
        let mut all = Vec::new();
        for f in &files {
            let s = parse_schedule(&read(f)?)
                .map_err(|d| usage(d.with_file(&f.display().to_string()).to_string()))?;
            all.push(s.stimuli());
        }
        let v = check_timed(&net, &doc.model, &doc.events, &mapping, &all, horizon)
            .map_err(|e| Fail(1, e.to_string()))?;
        println!("{v}");
        return Ok(v.outcome().exit_code() as u8);
    }
    let depth = depth.ok_or_else(|| usage("equiv needs --depth or --schedules"))?;
    let v = check_untimed(
        &net,
        &doc.model,
        &doc.events,
        &mapping,
        depth,
        Caps::default(),
    )
    .map_err(|e| Fail(1, e.to_string()))?;
    println!("{v}");
    Ok(v.outcome().exit_code() as u8)
}

fn cmd_render(file: &Path, level: &str, out: Option<&Path>) -> Result<u8, Fail> {
    let level =
        SimplifyLevel::parse(level).ok_or_else(|| usage(format!("unknown level `{level}`")))?;
    let dot = match ext(file) {
        "fm" => render_fm(&load_fm(file)?.model, level),
        _ => render_net(&load_net(file)?),
    };
    write_out(out, &dot)?;
    Ok(0)
}

fn dispatch(cmd: Cmd) -> Result<u8, Fail> {
    match cmd {
        Cmd::Validate { file } => cmd_validate(&file),
        Cmd::Simulate {
            fm,
            schedule,
            horizon,
            trace,
            map,
        } => cmd_simulate(
            &fm,
            schedule.as_deref(),
            horizon,
            trace.as_deref(),
            map.as_deref(),
        ),
        Cmd::Reach { pn, cap, dot } => cmd_reach(&pn, cap, dot.as_deref()),
        Cmd::Translate { pn, out, map_out } => {
            cmd_translate(&pn, out.as_deref(), map_out.as_deref())
        }
        Cmd::Events { fm, trace } => cmd_events(&fm, &trace),
        Cmd::Equiv {
            pn,
            fm,
            map,
            depth,
            schedules,
            horizon,
        } => cmd_equiv(&pn, &fm, &map, depth, schedules.as_deref(), horizon),
        Cmd::Render { file, level, out } => cmd_render(&file, &level, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
