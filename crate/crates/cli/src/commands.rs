use std::fs;
use std::path::{Path, PathBuf};

use pcstruct::depth::{
    extract_profile, invert_depth, normal_loss, normal_loss_gradient, normal_loss_map, quantization_stats,
    read_depth, revert_depth, write_depth,
};
use pcstruct::edge::edge_detect;
use pcstruct::loss::total_loss;
use pcstruct::metrics::{depth_metrics, image_metrics, positive_mask};
use pcstruct::numeric::{mean, median};
use pcstruct::phase::{compute_pc, compute_pc_noise_compensated};
use pcstruct::pnm::write_pnm;
use pcstruct::spectral::build_bank;
use pcstruct::structure::pc_loss_report;
use pcstruct::{EdgeOperator, Exec, GrayImage, LineSpec, LossComponents, NoiseMethod, PcResult};

use crate::config::Params;
use crate::error::{CliError, CliResult};
use crate::fixtures;
use crate::output::{csv_reals, max_of, read_gray, OutDir};

fn phase_congruency(img: &GrayImage, p: &Params) -> CliResult<PcResult> {
    let bank = build_bank(p.bank, img.width(), img.height())?;
    Ok(match p.noise_k {
        None => compute_pc(img, &bank, p.epsilon)?,
        Some(k) => compute_pc_noise_compensated(img, &bank, p.epsilon, NoiseMethod::MedianRayleigh { k })?,
    })
}

pub fn pc_map(p: &Params, out: &OutDir, image: &Path, energies: bool) -> CliResult<String> {
    let img = read_gray(image)?;
    let (w, h) = img.dims();
    let pc = phase_congruency(&img, p)?;
    out.write_map("pc.pgm", w, h, &pc.pc, 1.0, p.pc_bits)?;
    let energy_max = pc.orientation_energy.iter().map(|e| max_of(e)).fold(0.0, f64::max);
    if energies {
        for (j, e) in pc.orientation_energy.iter().enumerate() {
            out.write_map(&format!("energy_{j}.pgm"), w, h, e, energy_max, p.pc_bits)?;
        }
    }
    let lo = pc.pc.iter().copied().fold(f64::INFINITY, f64::min);
    // PGM code = value · scale
    let top = ((1u32 << p.pc_bits) - 1) as f64;
    let energy_scale = if energy_max > 0.0 { top / energy_max } else { 0.0 };
    let row = csv_reals(&[
        lo,
        mean(&pc.pc),
        median(&pc.pc),
        max_of(&pc.pc),
        energy_max,
        top,
        energy_scale,
    ]);
    let text = format!(
        "width,height,pc_min,pc_mean,pc_median,pc_max,energy_max,pc_scale,energy_scale\n{w},{h},{row}\n"
    );
    out.write_text("pc_stats.csv", &text)?;
    Ok(text)
}

/// File names written by [`edge_compare`], in panel order.
pub const EDGE_PANELS: [&str; 7] = [
    "y_channel.pgm",
    "pc.pgm",
    "roberts.pgm",
    "prewitt.pgm",
    "sobel.pgm",
    "canny.pgm",
    "laplacian.pgm",
];

pub fn edge_compare(p: &Params, out: &OutDir, image: &Path) -> CliResult<String> {
    let y = read_gray(image)?;
    let (w, h) = y.dims();
    write_pnm(&y, out.join(EDGE_PANELS[0]))?;
    let pc = phase_congruency(&y, p)?;
    out.write_map(EDGE_PANELS[1], w, h, &pc.pc, 1.0, 8)?;
    let mut text = String::from("panel,max_response\n");
    text.push_str(&format!("pc,{}\n", csv_reals(&[max_of(&pc.pc)])));
    for op in EdgeOperator::all(p.canny) {
        let map = edge_detect(&y, op)?;
        let peak = map.max();
        let full = if matches!(op, EdgeOperator::Canny(_)) { 1.0 } else { peak };
        out.write_map(&format!("{}.pgm", op.name()), w, h, &map.values, full, 8)?;
        text.push_str(&format!("{},{}\n", op.name(), csv_reals(&[peak])));
    }
    Ok(text)
}

pub fn pc_loss(p: &Params, out: &OutDir, gen: &Path, real: &Path) -> CliResult<String> {
    let a = read_gray(gen)?;
    let b = read_gray(real)?;
    if a.dims() != b.dims() {
        return Err(pcstruct::Error::DimensionMismatch {
            left_w: a.width(),
            left_h: a.height(),
            right_w: b.width(),
            right_h: b.height(),
        }
        .into());
    }
    let bank = build_bank(p.bank, a.width(), a.height())?;
    let r = pc_loss_report(&a, &b, &bank, p.epsilon, p.similarity, Exec::default())?;
    let text = format!(
        "l_pc,fsim,check,mean_s_pc,mean_s_g\n{}\n",
        csv_reals(&[r.loss, r.fsim, r.loss + r.fsim, r.mean_s_pc, r.mean_s_g])
    );
    out.write_text("pc_loss.csv", &text)?;
    Ok(text)
}

pub fn normal_loss_cmd(p: &Params, out: &OutDir, sim: &Path, rec: &Path, grad_out: Option<&Path>) -> CliResult<String> {
    let a = read_depth(sim)?;
    let b = read_depth(rec)?;
    let loss = normal_loss(&a, &b, p.step_scale)?;
    let map = normal_loss_map(&a, &b, p.step_scale, Exec::default())?;
    let (w, h) = a.dims();
    let interior: Vec<f64> = (1..h.saturating_sub(1))
        .flat_map(|y| (1..w - 1).map(move |x| y * w + x))
        .map(|i| map[i])
        .collect();
    let interior_mean = if interior.is_empty() { f64::NAN } else { mean(&interior) };
    let text = format!(
        "l_n,l_n_interior,width,height\n{},{w},{h}\n",
        csv_reals(&[loss, interior_mean])
    );
    out.write_text("normal_loss.csv", &text)?;
    if let Some(path) = grad_out {
        let grad = normal_loss_gradient(&a, &b, p.step_scale)?;
        let mut g = String::from("x,y,d_loss_d_rec\n");
        for (i, v) in grad.iter().enumerate() {
            g.push_str(&format!("{},{},{}\n", i % w, i / w, csv_reals(&[*v])));
        }
        fs::write(path, g).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Direction {
    /// 16-bit positive depth codes to inverse depth in [0, 1].
    Invert,
    /// Inverse depth back to 16-bit codes.
    Revert,
}

pub fn depth_invert(input: &Path, output: &Path, direction: Direction) -> CliResult<String> {
    let d = read_depth(input)?;
    let r = match direction {
        Direction::Invert => invert_depth(&d)?,
        Direction::Revert => revert_depth(&d)?,
    };
    write_depth(&r, output)?;
    let lo = r.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!(
        "encoding,width,height,min,max\n{},{},{},{}\n",
        r.encoding().name(),
        r.width(),
        r.height(),
        csv_reals(&[lo, hi])
    ))
}

pub fn profile(out: &OutDir, depth: &Path, line: &str) -> CliResult<String> {
    let spec: LineSpec = line.parse()?;
    let d = read_depth(depth)?;
    let pts = extract_profile(&d, spec)?;
    let mut prof = String::from("x,y,value\n");
    for pt in &pts {
        prof.push_str(&format!("{},{},{}\n", pt.x, pt.y, csv_reals(&[pt.value])));
    }
    let q = quantization_stats(&d);
    let stats = format!(
        "distinct_levels,mean_plateau_run,max_step\n{},{}\n",
        q.distinct_levels,
        csv_reals(&[q.mean_plateau_run, q.max_step])
    );
    out.write_text("profile.csv", &prof)?;
    out.write_text("quantization.csv", &stats)?;
    Ok(format!("{prof}\n{stats}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricKind {
    /// RMSE, MAE and SqRel over pixels with positive ground truth.
    Depth,
    /// PSNR and SSIM.
    Image,
}

/// `prediction,ground_truth` pairs, one per line; `#` comments and blank
/// lines are skipped. Relative paths resolve against the manifest's folder.
fn read_manifest(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split(',').map(str::trim).collect::<Vec<_>>()[..] {
            [a, b] if !a.is_empty() && !b.is_empty() => pairs.push((a.to_string(), b.to_string())),
            _ => {
                return Err(CliError::io(format!(
                    "{} line {}: expected `prediction,ground_truth`",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    if pairs.is_empty() {
        return Err(CliError::io(format!("{}: no pairs listed", path.display())));
    }
    Ok(pairs)
}

pub fn metrics(p: &Params, out: &OutDir, manifest: &Path, kind: MetricKind) -> CliResult<String> {
    let pairs = read_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let resolve = |s: &str| -> PathBuf { base.join(s) };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut text = match kind {
        MetricKind::Depth => String::from("prediction,ground_truth,rmse,mae,sq_rel,n_valid\n"),
        MetricKind::Image => String::from("prediction,ground_truth,psnr,ssim\n"),
    };
    for (pred, gt) in &pairs {
        let vals = match kind {
            MetricKind::Depth => {
                let a = read_depth(resolve(pred))?.as_metric();
                let b = read_depth(resolve(gt))?.as_metric();
                let m = depth_metrics(&a, &b, Some(&positive_mask(&b)), p.align_scale)?;
                vec![m.rmse, m.mae, m.sq_rel, m.n_valid as f64]
            }
            MetricKind::Image => {
                let m = image_metrics(&read_gray(&resolve(pred))?, &read_gray(&resolve(gt))?)?;
                vec![m.psnr, m.ssim]
            }
        };
        text.push_str(&format!("{pred},{gt},{}\n", csv_reals(&vals)));
        rows.push(vals);
    }
    let means: Vec<f64> = (0..rows[0].len())
        .map(|c| mean(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect();
    text.push_str(&format!("mean,,{}\n", csv_reals(&means)));
    out.write_text("metrics.csv", &text)?;
    Ok(text)
}

/// Reads a header naming the seven loss components (any order) followed by
/// one row of values per line.
fn read_components(path: &Path) -> CliResult<Vec<LossComponents>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let bad = |n: usize, why: &str| CliError::io(format!("{} line {}: {why}", path.display(), n + 1));
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hn, header) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut column = [usize::MAX; 7];
    for (k, field) in LossComponents::FIELDS.iter().enumerate() {
        let pos = names.iter().position(|n| n == field);
        column[k] = pos.ok_or_else(|| bad(hn, &format!("missing column {field}")))?;
    }
    if names.len() != 7 {
        return Err(bad(hn, "expected exactly the seven component columns"));
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 7 {
            return Err(bad(n, "expected seven values"));
        }
        let mut v = [0.0; 7];
        for k in 0..7 {
            v[k] = cells[column[k]]
                .parse()
                .map_err(|_| bad(n, &format!("cannot parse {:?}", cells[column[k]])))?;
        }
        rows.push(LossComponents::from_values(v));
    }
    if rows.is_empty() {
        return Err(bad(hn, "no value rows"));
    }
    Ok(rows)
}

pub fn total_loss_cmd(p: &Params, out: &OutDir, components: &Path, epoch: u64) -> CliResult<String> {
    let mut text = String::from("total\n");
    for c in read_components(components)? {
        text.push_str(&csv_reals(&[total_loss(&c, &p.weights, epoch)?]));
        text.push('\n');
    }
    out.write_text("total_loss.csv", &text)?;
    Ok(text)
}

/// Names of the files written by [`fixture`].
pub const FIXTURE_FILES: [&str; 7] = [
    "step_edge.pgm",
    "vascular.pgm",
    "frame.ppm",
    "frame_generated.ppm",
    "depth_plane.pgm",
    "depth_ramp.pgm",
    "depth_stairs.pgm",
];

pub fn fixture(p: &Params, out: &OutDir) -> CliResult<String> {
    let seed = p
        .seed
        .ok_or_else(|| CliError::usage("fixture generation needs an explicit --seed"))?;
    write_pnm(&fixtures::step_edge(seed), out.join(FIXTURE_FILES[0]))?;
    write_pnm(&fixtures::vascular(seed), out.join(FIXTURE_FILES[1]))?;
    write_pnm(&fixtures::endoscopy_frame(seed), out.join(FIXTURE_FILES[2]))?;
    write_pnm(&fixtures::endoscopy_frame_generated(seed), out.join(FIXTURE_FILES[3]))?;
    write_depth(&fixtures::depth_plane(), out.join(FIXTURE_FILES[4]))?;
    write_depth(&fixtures::depth_ramp(), out.join(FIXTURE_FILES[5]))?;
    write_depth(&fixtures::depth_stairs(), out.join(FIXTURE_FILES[6]))?;
    Ok(FIXTURE_FILES.iter().map(|f| format!("{f}\n")).collect())
}
