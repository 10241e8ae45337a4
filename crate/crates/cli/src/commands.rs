use std::fs;
use std::path::{Path, PathBuf};

use lattice_heat::analysis::{
    fourier_symbol_check, higher_difference_decay, kernel_decay, l2_optimality, large_time_profile,
    DecayReport,
};
use lattice_heat::io::{
    decay_sidecar, decay_to_csv, format_float, read_forcing, read_sequence, sequence_to_csv,
    sidecar_path, snapshot_sidecar, table_to_csv,
};
use lattice_heat::kernel::{heat_kernel, KernelQuantity, LpExponent};
use lattice_heat::moments::{
    kernel_moment, moment_polynomials, poly_eval, poly_real_roots, K_MAX, ROOT_DEGREE_MAX,
};
use lattice_heat::sequence::LatticeSequence;
use lattice_heat::solver::{duhamel, solve, ForcingSpec, SolutionSnapshot};
use lattice_heat::svg::{decay_plot, sequence_plot, Plot, Series};
use serde_json::json;

use crate::{Command, Common, Failure, Grid};

/// One file to be written once the whole run has succeeded.
#[derive(Debug)]
pub struct Output {
    pub path: PathBuf,
    pub contents: String,
}

impl Output {
    pub fn write(&self) -> Result<(), String> {
        fs::write(&self.path, &self.contents).map_err(|e| format!("{}: {e}", self.path.display()))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn compute(e: impl ToString) -> Failure {
    Failure::Compute(e.to_string())
}

fn check_common(c: &Common) -> Result<(), Failure> {
    if !(c.eps > 0.0 && c.eps < 1.0) {
        return Err(usage(format!("--eps must lie in (0, 1), got {}", c.eps)));
    }
    match c.out.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn check_time(t: f64) -> Result<(), Failure> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(usage(format!(
            "--t must be finite and non-negative, got {t}"
        )))
    }
}

fn check_grid(grid: &[f64], lo: f64, hi: f64, min_len: usize) -> Result<(), Failure> {
    if grid.len() < min_len {
        return Err(usage(format!(
            "--grid needs at least {min_len} points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|&t| t < lo || t > hi) {
        return Err(usage(format!("--grid must lie within [{lo}, {hi}]")));
    }
    Ok(())
}

fn load_sequence(path: &Path) -> Result<LatticeSequence, Failure> {
    read_sequence(path).map_err(|e| usage(e.to_string()))
}

fn load_forcing(path: &Path) -> Result<ForcingSpec, Failure> {
    read_forcing(path).map_err(|e| usage(e.to_string()))
}

fn with_plot(
    mut outputs: Vec<Output>,
    common: &Common,
    plot: impl FnOnce() -> Plot,
) -> Vec<Output> {
    if common.plot {
        outputs.push(Output {
            path: common.out.with_extension("svg"),
            contents: plot().render(),
        });
    }
    outputs
}

fn snapshot_outputs(snap: &SolutionSnapshot, common: &Common, title: &str) -> Vec<Output> {
    let outputs = vec![
        Output {
            path: common.out.clone(),
            contents: sequence_to_csv(&snap.u),
        },
        Output {
            path: sidecar_path(&common.out),
            contents: snapshot_sidecar(snap),
        },
    ];
    with_plot(outputs, common, || {
        sequence_plot(format!("{title} at t = {}", snap.t), &snap.u)
    })
}

fn decay_outputs(report: &DecayReport, sidecar: String, common: &Common) -> Vec<Output> {
    let outputs = vec![
        Output {
            path: common.out.clone(),
            contents: decay_to_csv(report),
        },
        Output {
            path: sidecar_path(&common.out),
            contents: sidecar,
        },
    ];
    with_plot(outputs, common, || decay_plot(report))
}

fn pretty(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json value serializes");
    s.push('\n');
    s
}

pub(crate) fn execute(command: Command) -> Result<Vec<Output>, Failure> {
    match command {
        Command::Kernel { t, common } => {
            check_common(&common)?;
            check_time(t)?;
            let k = heat_kernel(t, common.eps).map_err(compute)?;
            let seq = k.to_sequence().with_name("G");
            let outputs = vec![Output {
                path: common.out.clone(),
                contents: sequence_to_csv(&seq),
            }];
            Ok(with_plot(outputs, &common, || {
                sequence_plot(format!("heat kernel at t = {t}"), &seq)
            }))
        }

        Command::Evolve { f, g, t, common } => {
            check_common(&common)?;
            check_time(t)?;
            let f = load_sequence(&f)?;
            let g = g
                .as_deref()
                .map(load_forcing)
                .transpose()?
                .unwrap_or(ForcingSpec::None);
            let snap = solve(&f, &g, t, common.eps).map_err(compute)?;
            Ok(snapshot_outputs(&snap, &common, "solution"))
        }

        Command::Duhamel { g, t, common } => {
            check_common(&common)?;
            check_time(t)?;
            let g = load_forcing(&g)?;
            let snap = duhamel(&g, t, common.eps).map_err(compute)?;
            Ok(snapshot_outputs(&snap, &common, "forced solution"))
        }

        Command::Moments { t, kmax, common } => {
            check_common(&common)?;
            check_time(t)?;
            if kmax > K_MAX {
                return Err(usage(format!("--kmax must be at most {K_MAX}")));
            }
            let polys = moment_polynomials(kmax).map_err(compute)?;
            let k = heat_kernel(t, common.eps).map_err(compute)?;
            let mut rows = Vec::new();
            for order in 0..=2 * kmax as u32 {
                let m = kernel_moment(&k, order).map_err(compute)?;
                let exact = if order % 2 == 0 {
                    poly_eval(&polys[order as usize / 2], 2.0 * t)
                } else {
                    0.0
                };
                rows.push(vec![
                    order.to_string(),
                    format_float(m),
                    format_float(exact),
                ]);
            }
            Ok(vec![Output {
                path: common.out.clone(),
                contents: table_to_csv(&["order", "moment", "exact"], &rows),
            }])
        }

        Command::Poly {
            kmax,
            roots,
            common,
        } => {
            check_common(&common)?;
            let limit = if roots { ROOT_DEGREE_MAX } else { K_MAX };
            if kmax > limit {
                return Err(usage(format!("--kmax must be at most {limit} here")));
            }
            if common.plot && !roots {
                return Err(usage("--plot is only available together with --roots"));
            }
            let polys = moment_polynomials(kmax).map_err(compute)?;
            if !roots {
                let mut header = vec!["k".to_string(), "degree".to_string()];
                header.extend((0..=kmax).map(|i| format!("c{i}")));
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let rows: Vec<Vec<String>> = polys
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let mut row = vec![k.to_string(), p.degree().to_string()];
                        row.extend((0..=kmax).map(|i| {
                            if i <= p.degree() {
                                p.coeff(i).to_string()
                            } else {
                                String::new()
                            }
                        }));
                        row
                    })
                    .collect();
                return Ok(vec![Output {
                    path: common.out.clone(),
                    contents: table_to_csv(&header, &rows),
                }]);
            }
            let mut rows = Vec::new();
            let mut series = Vec::new();
            for (k, p) in polys.iter().enumerate().skip(1) {
                let mut r = poly_real_roots(p, 1e-12).map_err(compute)?;
                // Zero first, then moving away from the origin.
                r.reverse();
                for (i, z) in r.iter().enumerate() {
                    rows.push(vec![k.to_string(), i.to_string(), format_float(*z)]);
                }
                series.push(Series::scatter(
                    format!("k = {k}"),
                    r.iter().map(|&z| (z, k as f64)).collect(),
                ));
            }
            let outputs = vec![Output {
                path: common.out.clone(),
                contents: table_to_csv(&["k", "root_index", "root"], &rows),
            }];
            Ok(with_plot(outputs, &common, || Plot {
                title: "zeros of the moment polynomials".into(),
                x_label: "zero".into(),
                y_label: "k".into(),
                series,
                ..Plot::default()
            }))
        }

        Command::Decay {
            quantity,
            p,
            grid: Grid(grid),
            f,
            common,
        } => {
            check_common(&common)?;
            match f {
                Some(path) => {
                    if quantity.is_some() {
                        return Err(usage("--quantity cannot be combined with --f"));
                    }
                    if p.is_some_and(|p| p != LpExponent::TWO) {
                        return Err(usage("--f measures the l2 norm; --p must be 2 or omitted"));
                    }
                    check_grid(&grid, 0.0, f64::INFINITY, 2)?;
                    let f = load_sequence(&path)?;
                    if f.sum().abs() <= 1e-14 {
                        return Err(usage("initial data must have nonzero mass"));
                    }
                    let r = l2_optimality(&f, &grid).map_err(compute)?;
                    let mut meta: serde_json::Value =
                        serde_json::from_str(&decay_sidecar(&r.decay)).expect("own json");
                    meta["mass_ratios"] = json!(r.lower_ratios);
                    meta["l1_ratios"] = json!(r.upper_ratios);
                    Ok(decay_outputs(&r.decay, pretty(meta), &common))
                }
                None => {
                    check_grid(&grid, 1.0, 1e4, 6)?;
                    let q = quantity.unwrap_or(KernelQuantity::Value);
                    let r = kernel_decay(p.unwrap_or(LpExponent::Infinity), q, &grid)
                        .map_err(compute)?;
                    Ok(decay_outputs(&r, decay_sidecar(&r), &common))
                }
            }
        }

        Command::Converge {
            f,
            g,
            p,
            grid: Grid(grid),
            common,
        } => {
            check_common(&common)?;
            check_grid(&grid, 0.0, f64::INFINITY, 2)?;
            if f.is_none() && g.is_none() {
                return Err(usage("converge needs --f, --g or both"));
            }
            let f = f
                .as_deref()
                .map(load_sequence)
                .transpose()?
                .unwrap_or_else(|| LatticeSequence::zeros(0, -1));
            let g = g
                .as_deref()
                .map(load_forcing)
                .transpose()?
                .unwrap_or(ForcingSpec::None);
            if g.total_mass().is_none() {
                return Err(usage("forcing must decay with gamma > 1"));
            }
            if matches!(g, ForcingSpec::None) && f.sum().abs() <= 1e-14 {
                return Err(usage("initial data must have nonzero mass"));
            }
            let r = large_time_profile(&f, &g, p, &grid).map_err(compute)?;
            let pairs: Vec<Vec<String>> = r
                .samples
                .iter()
                .map(|s| vec![format_float(s.t), format_float(s.value)])
                .collect();
            let meta = json!({
                "label": format!("large-time profile p={p}"),
                "mass": r.mass,
                "slope": r.fit.as_ref().map(|f| f.slope),
                "intercept": r.fit.as_ref().map(|f| f.intercept),
                "max_residual": r.fit.as_ref().map(|f| f.max_residual),
                "errors": r.samples.iter().map(|s| s.error).collect::<Vec<_>>(),
            });
            let outputs = vec![
                Output {
                    path: common.out.clone(),
                    contents: table_to_csv(&["t", "value"], &pairs),
                },
                Output {
                    path: sidecar_path(&common.out),
                    contents: pretty(meta),
                },
            ];
            Ok(with_plot(outputs, &common, || match &r.fit {
                Some(fit) => decay_plot(fit),
                None => Plot {
                    title: format!("large-time profile p={p}"),
                    x_label: "t".into(),
                    y_label: "value".into(),
                    log_x: true,
                    log_y: true,
                    series: vec![Series::scatter(
                        "profile",
                        r.samples.iter().map(|s| (s.t, s.value)).collect(),
                    )],
                },
            }))
        }

        Command::Fourier { t, points, common } => {
            check_common(&common)?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(usage(format!("--t must be positive, got {t}")));
            }
            if points < 16 {
                return Err(usage("--points must be at least 16"));
            }
            let c = fourier_symbol_check(t, points).map_err(compute)?;
            let rows: Vec<Vec<String>> = c
                .points
                .iter()
                .map(|&(th, a, b)| {
                    vec![
                        format_float(th),
                        format_float(a),
                        format_float(b),
                        format_float((a - b).abs()),
                    ]
                })
                .collect();
            let meta =
                json!({ "t": c.t, "max_abs_error": c.max_abs_error, "tail_mass": c.tail_mass });
            let outputs = vec![
                Output {
                    path: common.out.clone(),
                    contents: table_to_csv(&["theta", "computed", "exact", "abs_error"], &rows),
                },
                Output {
                    path: sidecar_path(&common.out),
                    contents: pretty(meta),
                },
            ];
            Ok(with_plot(outputs, &common, || Plot {
                title: format!("kernel transform at t = {t}"),
                x_label: "theta".into(),
                y_label: "value".into(),
                series: vec![
                    Series::scatter(
                        "truncated sum",
                        c.points.iter().map(|p| (p.0, p.1)).collect(),
                    ),
                    Series::line("closed form", c.points.iter().map(|p| (p.0, p.2)).collect()),
                ],
                ..Plot::default()
            }))
        }

        Command::Diffdecay {
            order,
            p,
            grid: Grid(grid),
            common,
        } => {
            check_common(&common)?;
            if !(1..=6).contains(&order) {
                return Err(usage(format!("--order must lie in 1..=6, got {order}")));
            }
            check_grid(&grid, 1.0, 1e4, 2)?;
            let r = higher_difference_decay(order, p, &grid).map_err(compute)?;
            Ok(decay_outputs(&r, decay_sidecar(&r), &common))
        }
    }
}
