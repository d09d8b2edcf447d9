//! Plain-text exports: CSV time series and error tables, mesh and field
//! snapshots. All floating-point values are written with Rust's shortest
//! round-trip formatting, so reading a file back recovers every value
//! bit-exactly. The formats are documented in `docs/formats.md`.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::mesh::PolyMesh;
use crate::mms::ConvergenceStudy;
use crate::poisson::BenchRecord;
use crate::space::{DGSpace, SpaceSet};
use crate::system::{Layout, SystemState, TimeSeries};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, IoError> {
    tok.trim().parse().map_err(|_| IoError::Parse {
        line,
        message: format!("expected a number, found {tok:?}"),
    })
}

/// Render the time series as CSV with header
/// `time,Q_out,Q_sigma,P_sigma,energy`.
pub fn timeseries_csv(series: &TimeSeries) -> String {
    let mut out = String::from("time,Q_out,Q_sigma,P_sigma,energy\n");
    for i in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            series.time[i], series.q_out[i], series.q_sigma[i], series.p_sigma[i], series.energy[i]
        );
    }
    out
}

/// Write the time series CSV to a file.
pub fn write_timeseries(series: &TimeSeries, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, timeseries_csv(series))?;
    Ok(())
}

/// Parse a time series CSV produced by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> Result<TimeSeries, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_timeseries(&text)
}

/// Parse time series CSV text.
pub fn parse_timeseries(text: &str) -> Result<TimeSeries, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "time,Q_out,Q_sigma,P_sigma,energy" => {}
        other => {
            return Err(IoError::Parse {
                line: 1,
                message: format!("bad header {:?}", other.map(|(_, h)| h)),
            })
        }
    }
    let mut series = TimeSeries {
        time: Vec::new(),
        q_out: Vec::new(),
        q_sigma: Vec::new(),
        p_sigma: Vec::new(),
        energy: Vec::new(),
    };
    for (i, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split(',').collect();
        if cols.len() != 5 {
            return Err(IoError::Parse {
                line: i + 1,
                message: format!("expected 5 columns, found {}", cols.len()),
            });
        }
        series.time.push(parse_f64(cols[0], i + 1)?);
        series.q_out.push(parse_f64(cols[1], i + 1)?);
        series.q_sigma.push(parse_f64(cols[2], i + 1)?);
        series.p_sigma.push(parse_f64(cols[3], i + 1)?);
        series.energy.push(parse_f64(cols[4], i + 1)?);
    }
    Ok(series)
}

/// Render a convergence study as CSV with header `m,h,dofs,err,rate`;
/// the rate column is empty on the first refinement of each degree.
pub fn study_csv(study: &ConvergenceStudy) -> String {
    let mut out = String::from("m,h,dofs,err,rate\n");
    for r in &study.rows {
        let rate = r.rate.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.degree, r.h, r.dofs, r.error, rate);
    }
    out
}

/// Write the convergence study CSV to a file.
pub fn write_study(study: &ConvergenceStudy, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, study_csv(study))?;
    Ok(())
}

/// Human-readable study summary: fitted slope per degree.
pub fn study_summary(study: &ConvergenceStudy) -> String {
    let mut out = String::new();
    for &(m, slope) in &study.slopes {
        let flag = if study.non_monotone.contains(&m) { "  [non-monotone]" } else { "" };
        let _ = writeln!(out, "degree {m}: fitted slope {slope:.3}{flag}");
    }
    out
}

/// Render Poisson benchmark records as CSV.
pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("mesh,elements,m,dofs,E_L2,E_H1,assembly_s,solve_s\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.mesh_id, r.elements, r.degree, r.dofs, r.e_l2, r.e_h1, r.assembly_s, r.solve_s
        );
    }
    out
}

/// Write Poisson benchmark records to a CSV file.
pub fn write_bench(records: &[BenchRecord], path: &Path) -> Result<(), IoError> {
    std::fs::write(path, bench_csv(records))?;
    Ok(())
}

/// Render the mesh in the plain-text format of `docs/formats.md`: vertex
/// coordinates, per-element sub-triangulations with subdomain tags, and the
/// face list with kinds, owners, and normals.
pub fn mesh_text(mesh: &PolyMesh) -> String {
    let mut out = String::from("polydg-mesh v1\n");
    let _ = writeln!(out, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {}", v[0], v[1]);
    }
    let _ = writeln!(out, "elements {}", mesh.elements.len());
    for e in &mesh.elements {
        let mut line = format!("{:?} {}", e.subdomain, e.tris.len());
        for t in &e.tris {
            let _ = write!(line, " {} {} {}", t[0], t[1], t[2]);
        }
        out.push_str(&line);
        out.push('\n');
    }
    let _ = writeln!(out, "faces {}", mesh.faces.len());
    for f in &mesh.faces {
        let owner1 = f.owners[1].map(|o| o as i64).unwrap_or(-1);
        let _ = writeln!(
            out,
            "{:?} {} {} {} {} {} {} {}",
            f.kind,
            f.verts[0],
            f.verts[1],
            f.owners[0].unwrap(),
            owner1,
            f.normal[0],
            f.normal[1],
            f.measure
        );
    }
    out
}

/// Write the mesh text format to a file.
pub fn write_mesh(mesh: &PolyMesh, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, mesh_text(mesh))?;
    Ok(())
}

fn eval_vector(space: &DGSpace, l: usize, coeffs: &[f64], x: [f64; 2]) -> [f64; 2] {
    let nb = space.nb;
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let off = space.vector_offset(l, c);
        *o = space.eval_scalar(l, &coeffs[off..off + nb], x);
    }
    out
}

/// Render a full field snapshot: the dof blocks of every unknown (read back
/// bit-exactly by [`parse_fields`]) followed by point evaluations at the
/// sub-simplex vertices of each element for external plotting.
pub fn fields_text(
    mesh: &PolyMesh,
    spaces: &SpaceSet,
    layout: &Layout,
    state: &SystemState,
) -> String {
    let mut out = String::from("polydg-fields v1\n");
    let _ = writeln!(out, "time {}", state.time);
    let mut blocks: Vec<(String, &[f64])> = vec![
        ("d".to_string(), state.d(layout)),
        ("z".to_string(), state.z(layout)),
    ];
    for j in 0..layout.n_j {
        blocks.push((format!("p{j}"), state.p(layout, j)));
    }
    blocks.push(("u".to_string(), state.u(layout)));
    blocks.push(("q".to_string(), state.q(layout)));
    let _ = writeln!(out, "fields {}", blocks.len());
    for (name, dofs) in &blocks {
        let _ = writeln!(out, "field {} {}", name, dofs.len());
        for v in *dofs {
            let _ = writeln!(out, "{v}");
        }
    }

    // Point samples at sub-simplex vertices, one section per subdomain.
    let poro_cols = 4 + layout.n_j;
    let mut poro_rows: Vec<String> = Vec::new();
    for (l, &e) in spaces.el.elem_ids.iter().enumerate() {
        for x in element_sample_points(mesh, e) {
            let d = eval_vector(&spaces.el, l, state.d(layout), x);
            let z = eval_vector(&spaces.el, l, state.z(layout), x);
            let mut row = format!("{e} {} {} {} {} {} {}", x[0], x[1], d[0], d[1], z[0], z[1]);
            for j in 0..layout.n_j {
                let lp = spaces.p.local(e).unwrap();
                let nb = spaces.p.nb;
                let off = spaces.p.scalar_offset(lp);
                let v = spaces.p.eval_scalar(lp, &state.p(layout, j)[off..off + nb], x);
                let _ = write!(row, " {v}");
            }
            poro_rows.push(row);
        }
    }
    let _ = writeln!(out, "samples_poroelastic {} {}", poro_rows.len(), 3 + poro_cols);
    for r in poro_rows {
        out.push_str(&r);
        out.push('\n');
    }

    let mut fluid_rows: Vec<String> = Vec::new();
    for (l, &e) in spaces.v.elem_ids.iter().enumerate() {
        for x in element_sample_points(mesh, e) {
            let u = eval_vector(&spaces.v, l, state.u(layout), x);
            let lq = spaces.q.local(e).unwrap();
            let nb = spaces.q.nb;
            let off = spaces.q.scalar_offset(lq);
            let q = spaces.q.eval_scalar(lq, &state.q(layout)[off..off + nb], x);
            fluid_rows.push(format!("{e} {} {} {} {} {}", x[0], x[1], u[0], u[1], q));
        }
    }
    let _ = writeln!(out, "samples_fluid {} 6", fluid_rows.len());
    for r in fluid_rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Unique sub-simplex vertices of one element, in first-appearance order.
fn element_sample_points(mesh: &PolyMesh, e: usize) -> Vec<[f64; 2]> {
    let mut seen = Vec::new();
    let mut pts = Vec::new();
    for t in &mesh.elements[e].tris {
        for &v in t {
            if !seen.contains(&v) {
                seen.push(v);
                pts.push(mesh.vertices[v]);
            }
        }
    }
    pts
}

/// Write a field snapshot to a file.
pub fn export_fields(
    mesh: &PolyMesh,
    spaces: &SpaceSet,
    layout: &Layout,
    state: &SystemState,
    path: &Path,
) -> Result<(), IoError> {
    std::fs::write(path, fields_text(mesh, spaces, layout, state))?;
    Ok(())
}

/// Parse the dof blocks of a field snapshot back into (name, values) pairs;
/// the sample sections are skipped.
pub fn parse_fields(text: &str) -> Result<(f64, Vec<(String, Vec<f64>)>), IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "polydg-fields v1" => {}
        other => {
            return Err(IoError::Parse {
                line: 1,
                message: format!("bad magic {:?}", other.map(|(_, l)| l)),
            })
        }
    }
    let (ln, time_line) = lines.next().ok_or(IoError::Parse {
        line: 2,
        message: "missing time line".into(),
    })?;
    let time = parse_f64(
        time_line.strip_prefix("time ").ok_or(IoError::Parse {
            line: ln + 1,
            message: "expected `time <t>`".into(),
        })?,
        ln + 1,
    )?;
    let (ln, count_line) = lines.next().ok_or(IoError::Parse {
        line: 3,
        message: "missing fields line".into(),
    })?;
    let n_fields: usize = count_line
        .strip_prefix("fields ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or(IoError::Parse {
            line: ln + 1,
            message: "expected `fields <n>`".into(),
        })?;
    let mut blocks = Vec::new();
    for _ in 0..n_fields {
        let (ln, head) = lines.next().ok_or(IoError::Parse {
            line: 0,
            message: "truncated field block".into(),
        })?;
        let mut parts = head.split_whitespace();
        let (magic, name, len) = (parts.next(), parts.next(), parts.next());
        if magic != Some("field") {
            return Err(IoError::Parse {
                line: ln + 1,
                message: format!("expected `field <name> <len>`, found {head:?}"),
            });
        }
        let name = name.unwrap_or_default().to_string();
        let len: usize = len.and_then(|s| s.parse().ok()).ok_or(IoError::Parse {
            line: ln + 1,
            message: "bad field length".into(),
        })?;
        let mut vals = Vec::with_capacity(len);
        for _ in 0..len {
            let (ln, v) = lines.next().ok_or(IoError::Parse {
                line: 0,
                message: "truncated dof block".into(),
            })?;
            vals.push(parse_f64(v, ln + 1)?);
        }
        blocks.push((name, vals));
    }
    Ok((time, blocks))
}
