//! CSV / JSON / gnuplot outputs and the trace reader used by `verify`.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{Mode, SwitchedSystem};
use crate::predictor::{ModeSequence, Predictor, PredictorTrace};
use crate::simulator::{initial_trace, switching_instants, Diagnostics, RunKind, SimConfig, SimulationResult};

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn trace_header(n: usize, modes: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.push("u".into());
    h.push("sigma".into());
    h.extend((1..=modes).map(|i| format!("E{i}")));
    h.push("V".into());
    h.extend((1..=n).map(|i| format!("p{i}")));
    h
}

/// One row per step: `t,x1..xn,u,sigma,E1..Ep,V,p1..pn`. Predictor columns
/// are empty for runs without a predictor. Numbers are written in shortest
/// round-trip form.
pub fn write_trace_csv<W: Write>(out: W, sys: &SwitchedSystem, result: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = sys.dim();
    w.write_record(trace_header(n, sys.modes().len()))?;
    let mut row = Vec::new();
    for j in 0..result.len() {
        row.clear();
        let x = &result.states[j];
        row.push(fmt(result.times[j]));
        row.extend(x.iter().map(|v| fmt(*v)));
        row.push(fmt(result.inputs[j]));
        row.push(result.modes[j].number().to_string());
        row.extend(sys.partition().energies(x).into_iter().map(fmt));
        row.push(fmt(result.lyapunov[j]));
        match result.predictors.get(j) {
            Some(p) => row.extend(p.iter().map(|v| fmt(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("trace line {line}: cannot parse {field:?} as a number")))
}

/// Rebuild a run from a trace written by [`write_trace_csv`]. Step, delay,
/// hysteresis and `U_0` come from `cfg`; the switch list is recomputed from
/// the `sigma` column.
pub fn read_trace_csv<R: Read>(input: R, cfg: &SimConfig) -> Result<SimulationResult> {
    let sys = &cfg.system;
    let n = sys.dim();
    let p = sys.modes().len();
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let expected = trace_header(n, p);
    if header != expected {
        return Err(Error::InvalidConfig(format!(
            "trace header does not match the system: expected {}, got {}",
            expected.join(","),
            header.join(",")
        )));
    }
    let mut res = SimulationResult {
        kind: RunKind::ClosedLoop,
        step: sys.step(),
        delay: sys.delay(),
        hysteresis: sys.hysteresis(),
        times: Vec::new(),
        states: Vec::new(),
        inputs: Vec::new(),
        modes: Vec::new(),
        predictors: Vec::new(),
        predictor_modes: Vec::new(),
        lyapunov: Vec::new(),
        switches: Vec::new(),
        initial_inputs: cfg.u0.clone(),
        initial_trace: None,
        diagnostics: Diagnostics::default(),
    };
    let mut has_predictor = true;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| parse(&rec[k], line);
        res.times.push(f(0)?);
        res.states.push(Vector::from_iterator(n, (1..=n).map(|k| f(k).unwrap_or(f64::NAN))));
        if !res.states.last().unwrap().iter().all(|v| !v.is_nan()) {
            return Err(Error::InvalidConfig(format!("trace line {line}: bad state")));
        }
        res.inputs.push(f(n + 1)?);
        let sigma = f(n + 2)?;
        if sigma < 1.0 || sigma > p as f64 || sigma.fract() != 0.0 {
            return Err(Error::InvalidConfig(format!("trace line {line}: sigma {sigma} out of range")));
        }
        res.modes.push(Mode::from_number(sigma as usize));
        res.lyapunov.push(f(n + 3 + p)?);
        let base = n + 4 + p;
        if rec[base].trim().is_empty() {
            has_predictor = false;
        } else {
            let pv = Vector::from_iterator(n, (0..n).map(|k| f(base + k).unwrap_or(f64::NAN)));
            res.predictor_modes.push(sys.partition().argmax(&pv));
            res.predictors.push(pv);
        }
    }
    if res.times.is_empty() {
        return Err(Error::InvalidConfig("trace has no rows".into()));
    }
    if has_predictor && res.predictors.len() == res.len() {
        let pred = Predictor::new(sys, cfg.predictor_method)?;
        res.initial_trace = Some(initial_trace(&pred, &res.states[0], &cfg.u0)?);
    } else {
        res.kind = RunKind::OpenLoop;
        res.predictors.clear();
        res.predictor_modes.clear();
    }
    res.switches = switching_instants(&res);
    Ok(res)
}

/// Switching instants as `t,from,to` (1-based modes).
pub fn write_switches_csv<W: Write>(out: W, result: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "from", "to"])?;
    for s in &result.switches {
        w.write_record([fmt(s.time), s.from.number().to_string(), s.to.number().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `theta,p1..pn,sigma` along the prediction window.
pub fn write_predictor_trace_csv<W: Write>(out: W, trace: &PredictorTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = trace.values.first().map_or(0, |v| v.len());
    let mut header = vec!["theta".to_string()];
    header.extend((1..=n).map(|i| format!("p{i}")));
    header.push("sigma".into());
    w.write_record(&header)?;
    for ((theta, v), m) in trace.theta.iter().zip(&trace.values).zip(&trace.mode_at) {
        let mut row = vec![fmt(*theta)];
        row.extend(v.iter().map(|x| fmt(*x)));
        row.push(m.number().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `theta,mode` rows: the mode entered at each listed time.
pub fn write_mode_sequence_csv<W: Write>(out: W, seq: &ModeSequence) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "mode"])?;
    for (t, m) in seq.times.iter().zip(&seq.modes) {
        w.write_record([fmt(*t), m.number().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read an input window given as `theta,u` rows on the delay grid.
pub fn read_history_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_reader(input);
    let mut theta = Vec::new();
    let mut u = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidConfig(format!("history line {}: expected theta,u", i + 2)));
        }
        theta.push(parse(&rec[0], i + 2)?);
        u.push(parse(&rec[1], i + 2)?);
    }
    Ok((theta, u))
}

/// Whitespace-separated columns with a `#` header line.
pub fn write_dat<W: Write>(mut out: W, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(out, "# {}", header.join(" "))?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Switching signal over time (`t sigma`).
pub fn write_mode_dat<W: Write>(out: W, result: &SimulationResult) -> Result<()> {
    write_dat(
        out,
        &["t", "sigma"],
        result.times.iter().zip(&result.modes).map(|(t, m)| vec![*t, m.number() as f64]),
    )
}

/// State components over time (`t x1 .. xn`).
pub fn write_states_dat<W: Write>(out: W, result: &SimulationResult) -> Result<()> {
    let n = result.states.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_dat(
        out,
        &refs,
        result.times.iter().zip(&result.states).map(|(t, x)| {
            let mut r = vec![*t];
            r.extend(x.iter().copied());
            r
        }),
    )
}

/// Phase portrait of a planar run (`x1 x2 sigma`).
pub fn write_phase_dat<W: Write>(out: W, result: &SimulationResult) -> Result<()> {
    write_dat(
        out,
        &["x1", "x2", "sigma"],
        result
            .states
            .iter()
            .zip(&result.modes)
            .map(|(x, m)| vec![x[0], x.get(1).copied().unwrap_or(0.0), m.number() as f64]),
    )
}

/// Square grid of planar points labelled with the active region.
pub fn write_regions_dat<W: Write>(out: W, sys: &SwitchedSystem, extent: f64, resolution: usize) -> Result<()> {
    if sys.dim() != 2 {
        return Err(Error::InvalidConfig("region plot needs a planar system".into()));
    }
    let r = resolution.max(2);
    let part = sys.partition();
    write_dat(
        out,
        &["x1", "x2", "sigma"],
        (0..r * r).map(move |k| {
            let (i, j) = (k / r, k % r);
            let x1 = -extent + 2.0 * extent * i as f64 / (r - 1) as f64;
            let x2 = -extent + 2.0 * extent * j as f64 / (r - 1) as f64;
            let m = part.argmax(&Vector::from_vec(vec![x1, x2]));
            vec![x1, x2, m.number() as f64]
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kind: RunKind,
    pub steps: usize,
    pub horizon: f64,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub final_norm: f64,
    pub switch_count: usize,
    pub switch_times: Vec<f64>,
    pub mode_disagreements: usize,
    pub guard: Option<String>,
}

impl RunSummary {
    pub fn new(result: &SimulationResult) -> Self {
        let x = result.final_state();
        RunSummary {
            kind: result.kind,
            steps: result.len().saturating_sub(1),
            horizon: result.times.last().copied().unwrap_or(0.0),
            final_time: result.times.last().copied().unwrap_or(0.0),
            final_state: x.iter().copied().collect(),
            final_norm: x.norm(),
            switch_count: result.switches.len(),
            switch_times: result.switches.iter().map(|s| s.time).collect(),
            mode_disagreements: result.diagnostics.mode_disagreements,
            guard: result.diagnostics.guard.as_ref().map(|g| g.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::paper_resolved;
    use crate::simulator::simulate_closed_loop;

    #[test]
    fn trace_round_trip_is_exact() {
        let r = paper_resolved();
        let mut cfg = r.sim.clone();
        cfg.horizon = 1.5;
        let res = simulate_closed_loop(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &r.system, &res).unwrap();
        let back = read_trace_csv(buf.as_slice(), &cfg).unwrap();
        assert_eq!(back.times, res.times);
        assert_eq!(back.states, res.states);
        assert_eq!(back.inputs, res.inputs);
        assert_eq!(back.modes, res.modes);
        assert_eq!(back.predictors, res.predictors);
        assert_eq!(back.lyapunov, res.lyapunov);
        assert_eq!(back.switches.len(), res.switches.len());
        assert_eq!(back.initial_trace.unwrap().values, res.initial_trace.clone().unwrap().values);
    }

    #[test]
    fn header_mismatch_rejected() {
        let r = paper_resolved();
        let bad = "t,x1,u\n0,1,2\n";
        assert!(read_trace_csv(bad.as_bytes(), &r.sim).is_err());
    }

    #[test]
    fn history_reader() {
        let (theta, u) = read_history_csv("theta,u\n-1,0.5\n-0.5,1\n".as_bytes()).unwrap();
        assert_eq!(theta, vec![-1.0, -0.5]);
        assert_eq!(u, vec![0.5, 1.0]);
    }

    #[test]
    fn regions_cover_grid() {
        let r = paper_resolved();
        let mut buf = Vec::new();
        write_regions_dat(&mut buf, &r.system, 1.0, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
    }
}
