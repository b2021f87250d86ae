//! `render`: draw one test sample as vertically aligned panels: the raw
//! series, the per-step labels with the ground-truth mask, and one score
//! heatmap per method. Output is a vector SVG, a raster PPM fallback, and
//! the numbers behind both as CSV. All three are pure functions of their
//! inputs, so reruns are byte-identical.

use crate::error::{runtime, validation, CliError};
use crate::run::{check_hash, create_dir, read_dataset_checked, SEED_KEY};
use crate::Ctx;
use ndarray::Array2;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use tsexplain_core::explainers::read_importance;
use tsexplain_core::TimeSeriesSample;

const CELL_W: f64 = 10.0;
const HEAT_H: f64 = 14.0;
const DATA_H: f64 = 120.0;
const LABEL_H: f64 = 16.0;
const MARGIN_L: f64 = 120.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_TOP: f64 = 10.0;
const PANEL_GAP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 34.0;

const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn run(ctx: &Ctx, sample_id: &str) -> Result<(), CliError> {
    let paths = ctx.paths();
    let test = read_dataset_checked(&paths.test_data(), &ctx.hash, ctx.force)?;
    let sample = test
        .samples
        .iter()
        .find(|s| s.id == sample_id)
        .ok_or_else(|| {
            validation(format!(
                "unknown sample id `{sample_id}` in {} ({} samples)",
                paths.test_data().display(),
                test.samples.len()
            ))
        })?;

    let mut maps: Vec<(String, Array2<f64>)> = Vec::new();
    for label in ctx.config.method_labels() {
        let path = paths.importance(&label);
        if !path.exists() {
            println!("render: no scores at {}; skipping that panel", path.display());
            continue;
        }
        let file = fs::File::open(&path)
            .map_err(|e| validation(format!("cannot open {}: {e}", path.display())))?;
        let (meta, results) = read_importance(BufReader::new(file))
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
        check_hash("importance file", &path, &meta.config_hash, &ctx.hash, ctx.force)?;
        let result = results
            .iter()
            .find(|r| r.sample_id == sample.id)
            .ok_or_else(|| {
                validation(format!(
                    "importance file {} has no scores for sample `{sample_id}`",
                    path.display()
                ))
            })?;
        maps.push((label, result.scores.clone()));
    }
    if maps.is_empty() {
        return Err(validation(
            "no importance files found for the configured methods; run `tsexplain explain` first",
        ));
    }

    create_dir(&paths.renders_dir())?;
    let svg_path = paths.renders_dir().join(format!("{sample_id}.svg"));
    let ppm_path = paths.renders_dir().join(format!("{sample_id}.ppm"));
    let csv_path = paths.renders_dir().join(format!("{sample_id}.csv"));
    write(&svg_path, draw_svg(ctx, sample, &maps))?;
    write_bytes(&ppm_path, draw_ppm(sample, &maps))?;
    write(&csv_path, numbers_csv(ctx, sample, &maps))?;
    println!(
        "render: {sample_id} ({} panels) -> {}",
        2 + maps.len(),
        paths.renders_dir().display()
    );
    Ok(())
}

fn write(path: &std::path::Path, text: String) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

fn write_bytes(path: &std::path::Path, bytes: Vec<u8>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

/// Maps `t` in [-1, 1] onto a blue-white-red diverging scale.
fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64, u: f64| (a + (b - a) * u).round() as u8;
    if t >= 0.0 {
        (lerp(255.0, 178.0, t), lerp(255.0, 24.0, t), lerp(255.0, 43.0, t))
    } else {
        (lerp(255.0, 33.0, -t), lerp(255.0, 102.0, -t), lerp(255.0, 172.0, -t))
    }
}

/// Class -> gray level; class 0 is near-white.
fn label_gray(class: u32, num_classes: usize) -> u8 {
    let span = (num_classes.max(2) - 1) as f64;
    (232.0 - 180.0 * class as f64 / span).round() as u8
}

fn max_abs(scores: &Array2<f64>) -> f64 {
    scores.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn draw_svg(ctx: &Ctx, sample: &TimeSeriesSample, maps: &[(String, Array2<f64>)]) -> String {
    let (d, t_len) = sample.values.dim();
    let plot_w = CELL_W * t_len as f64;
    let has_gt = sample.gt_importance.is_some();
    let gt_h = if has_gt { 4.0 + HEAT_H * d as f64 } else { 0.0 };
    let panel_heights: Vec<f64> = std::iter::once(DATA_H)
        .chain(std::iter::once(LABEL_H + gt_h))
        .chain(maps.iter().map(|_| HEAT_H * d as f64))
        .collect();
    let height: f64 = MARGIN_TOP
        + panel_heights.iter().sum::<f64>()
        + PANEL_GAP * panel_heights.len() as f64
        + MARGIN_BOTTOM;
    let width = MARGIN_L + plot_w + MARGIN_R;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"11\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN_L:.0}\" y=\"{:.0}\" font-size=\"12\">sample {} (seed {}, config {})</text>",
        MARGIN_TOP + 4.0,
        xml_escape(&sample.id),
        ctx.config.seed,
        &ctx.hash[..12]
    );

    let mut y = MARGIN_TOP + PANEL_GAP;

    // Panel 1: the series as lines.
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in sample.values.iter() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    let (lo, hi) = (lo - pad, hi + pad);
    caption(&mut svg, y, "data");
    frame(&mut svg, y, plot_w, DATA_H);
    for f in 0..d {
        let color = SERIES_COLORS[f % SERIES_COLORS.len()];
        let mut points = String::new();
        for t in 0..t_len {
            let x = MARGIN_L + (t as f64 + 0.5) * CELL_W;
            let v = sample.values[[f, t]];
            let py = y + DATA_H - (v - lo) / (hi - lo) * DATA_H;
            let _ = write!(points, "{x:.2},{py:.2} ");
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>",
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.0}\" y=\"{:.1}\" fill=\"{color}\">f{f}</text>",
            6.0,
            y + 12.0 + 13.0 * f as f64
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.1}\" fill=\"#666\" font-size=\"9\">{hi:.2}</text>",
        MARGIN_L - 42.0,
        y + 8.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.1}\" fill=\"#666\" font-size=\"9\">{lo:.2}</text>",
        MARGIN_L - 42.0,
        y + DATA_H
    );
    y += DATA_H + PANEL_GAP;

    // Panel 2: per-step labels, with the ground-truth mask underneath.
    let caption_text = if has_gt {
        "labels + ground truth".to_string()
    } else {
        "labels (no ground-truth mask for this sample)".to_string()
    };
    caption(&mut svg, y, &caption_text);
    for (t, &class) in sample.labels.iter().enumerate() {
        let g = label_gray(class, class_count(sample));
        cell(&mut svg, t, y, LABEL_H, (g, g, g));
    }
    frame(&mut svg, y, plot_w, LABEL_H);
    if let Some(gt) = &sample.gt_importance {
        let gy = y + LABEL_H + 4.0;
        for f in 0..d {
            for t in 0..t_len {
                let color = if gt[[f, t]] > 0 { (214, 39, 40) } else { (255, 255, 255) };
                cell(&mut svg, t, gy + f as f64 * HEAT_H, HEAT_H, color);
            }
            feature_tick(&mut svg, gy, f);
        }
        frame(&mut svg, gy, plot_w, HEAT_H * d as f64);
    }
    y += LABEL_H + gt_h + PANEL_GAP;

    // One heatmap panel per method.
    for (label, scores) in maps {
        let scale = max_abs(scores);
        caption(&mut svg, y, &format!("{label} (max |score| {scale:.3e})"));
        for f in 0..d {
            for t in 0..t_len {
                let v = if scale > 0.0 { scores[[f, t]] / scale } else { 0.0 };
                cell(&mut svg, t, y + f as f64 * HEAT_H, HEAT_H, diverging(v));
            }
            feature_tick(&mut svg, y, f);
        }
        frame(&mut svg, y, plot_w, HEAT_H * d as f64);
        y += HEAT_H * d as f64 + PANEL_GAP;
    }

    // Step ticks along the bottom.
    let axis_y = y - PANEL_GAP + 4.0;
    for t in (0..t_len).step_by(10) {
        let x = MARGIN_L + (t as f64 + 0.5) * CELL_W;
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{axis_y:.1}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#666\"/>",
            axis_y + 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.1}\" fill=\"#666\" font-size=\"9\">{t}</text>",
            x - 3.0,
            axis_y + 14.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.1}\" fill=\"#666\" font-size=\"9\">step</text>",
        MARGIN_L + plot_w - 24.0,
        axis_y + 24.0
    );

    svg.push_str("</svg>\n");
    svg
}

fn class_count(sample: &TimeSeriesSample) -> usize {
    sample.labels.iter().map(|&c| c as usize + 1).max().unwrap_or(2).max(2)
}

fn caption(svg: &mut String, y: f64, text: &str) {
    let _ = writeln!(
        svg,
        "<text x=\"6\" y=\"{:.1}\" font-size=\"11\" fill=\"#222\">{}</text>",
        y - 8.0,
        xml_escape(text)
    );
}

fn cell(svg: &mut String, t: usize, y: f64, h: f64, (r, g, b): (u8, u8, u8)) {
    if (r, g, b) == (255, 255, 255) {
        return; // the white background already shows through
    }
    let x = MARGIN_L + t as f64 * CELL_W;
    let _ = writeln!(
        svg,
        "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{CELL_W:.1}\" height=\"{h:.1}\" \
         fill=\"#{r:02x}{g:02x}{b:02x}\"/>"
    );
}

fn frame(svg: &mut String, y: f64, w: f64, h: f64) {
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_L:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" \
         fill=\"none\" stroke=\"#888\" stroke-width=\"0.8\"/>"
    );
}

fn feature_tick(svg: &mut String, panel_y: f64, f: usize) {
    let _ = writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.1}\" fill=\"#666\" font-size=\"9\">f{f}</text>",
        MARGIN_L - 22.0,
        panel_y + (f as f64 + 0.7) * HEAT_H
    );
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Raster fallback: the same panels as filled pixel blocks (the series panel
/// becomes a per-feature min-max heat strip). Binary PPM, 8x8 blocks.
fn draw_ppm(sample: &TimeSeriesSample, maps: &[(String, Array2<f64>)]) -> Vec<u8> {
    const BLOCK: usize = 8;
    let (d, t_len) = sample.values.dim();

    // Build the image row by logical row: each entry is one cell color row.
    let mut rows: Vec<Vec<(u8, u8, u8)>> = Vec::new();
    let push_sep = |rows: &mut Vec<Vec<(u8, u8, u8)>>| {
        rows.push(vec![(255, 255, 255); t_len]);
    };

    // Data: per-feature min-max normalized, white -> series color.
    for f in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in 0..t_len {
            lo = lo.min(sample.values[[f, t]]);
            hi = hi.max(sample.values[[f, t]]);
        }
        let span = (hi - lo).max(1e-9);
        let target = hex_rgb(SERIES_COLORS[f % SERIES_COLORS.len()]);
        let row: Vec<(u8, u8, u8)> = (0..t_len)
            .map(|t| {
                let u = (sample.values[[f, t]] - lo) / span;
                mix((255, 255, 255), target, u)
            })
            .collect();
        rows.push(row);
    }
    push_sep(&mut rows);

    let classes = class_count(sample);
    rows.push(
        sample
            .labels
            .iter()
            .map(|&c| {
                let g = label_gray(c, classes);
                (g, g, g)
            })
            .collect(),
    );
    if let Some(gt) = &sample.gt_importance {
        for f in 0..d {
            rows.push(
                (0..t_len)
                    .map(|t| if gt[[f, t]] > 0 { (214, 39, 40) } else { (255, 255, 255) })
                    .collect(),
            );
        }
    }

    for (_, scores) in maps {
        push_sep(&mut rows);
        let scale = max_abs(scores);
        for f in 0..d {
            rows.push(
                (0..t_len)
                    .map(|t| {
                        let v = if scale > 0.0 { scores[[f, t]] / scale } else { 0.0 };
                        diverging(v)
                    })
                    .collect(),
            );
        }
    }

    let width = t_len * BLOCK;
    let height = rows.len() * BLOCK;
    let mut out = Vec::with_capacity(width * height * 3 + 32);
    out.extend_from_slice(format!("P6\n{width} {height}\n255\n").as_bytes());
    for row in &rows {
        for _ in 0..BLOCK {
            for &(r, g, b) in row {
                for _ in 0..BLOCK {
                    out.extend_from_slice(&[r, g, b]);
                }
            }
        }
    }
    out
}

fn hex_rgb(hex: &str) -> (u8, u8, u8) {
    let v = u32::from_str_radix(&hex[1..], 16).expect("palette entries are #rrggbb");
    (((v >> 16) & 0xff) as u8, ((v >> 8) & 0xff) as u8, (v & 0xff) as u8)
}

fn mix(a: (u8, u8, u8), b: (u8, u8, u8), u: f64) -> (u8, u8, u8) {
    let u = u.clamp(0.0, 1.0);
    let ch = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * u).round() as u8;
    (ch(a.0, b.0), ch(a.1, b.1), ch(a.2, b.2))
}

/// The numbers behind the panels: `series,feature,step,value` rows, with the
/// label rows leaving the feature column empty.
fn numbers_csv(ctx: &Ctx, sample: &TimeSeriesSample, maps: &[(String, Array2<f64>)]) -> String {
    let (d, t_len) = sample.values.dim();
    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "# {{\"sample_id\":\"{}\",\"config_hash\":\"{}\",\"{}\":{}}}",
        sample.id, ctx.hash, SEED_KEY, ctx.config.seed
    );
    csv.push_str("series,feature,step,value\n");
    for f in 0..d {
        for t in 0..t_len {
            let _ = writeln!(csv, "data,{f},{t},{}", sample.values[[f, t]]);
        }
    }
    for (t, &class) in sample.labels.iter().enumerate() {
        let _ = writeln!(csv, "label,,{t},{class}");
    }
    if let Some(gt) = &sample.gt_importance {
        for f in 0..d {
            for t in 0..t_len {
                let _ = writeln!(csv, "gt,{f},{t},{}", gt[[f, t]]);
            }
        }
    }
    for (label, scores) in maps {
        for f in 0..d {
            for t in 0..t_len {
                let _ = writeln!(csv, "{label},{f},{t},{}", scores[[f, t]]);
            }
        }
    }
    csv
}
