//! Built-in validation matrix: reference signals and fractals with known
//! dimensions, each checked against an acceptance range.

use std::process::ExitCode;

use fractal_core::boxcount::{
    box_dimension, default_box_sizes, gen_filled_square, gen_julia_boundary, gen_koch, gen_segment,
    gen_sierpinski_carpet, JuliaParams,
};
use fractal_core::higuchi::DEFAULT_K_MAX;
use fractal_core::signal::{
    gen_ramp, gen_sine, gen_square, gen_triangle, gen_weierstrass, gen_white_noise,
};
use fractal_core::{
    higuchi_dimension, DimensionEstimate, HiguchiConfig, TimeSeries, WeierstrassParams,
};

const LOG3_4: f64 = 1.261_859_507_142_914_9;
const LOG3_8: f64 = 1.892_789_260_714_372_3;

struct Row {
    name: String,
    lo: f64,
    hi: f64,
    /// Higuchi rows may degrade under a reduced `k_max`.
    higuchi: bool,
    outcome: Result<DimensionEstimate, String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    ExpectedFail,
}

impl Row {
    fn status(&self, degraded: bool) -> Status {
        let ok = matches!(&self.outcome, Ok(e) if e.dimension >= self.lo && e.dimension <= self.hi);
        match (ok, degraded && self.higuchi) {
            (true, _) => Status::Pass,
            (false, true) => Status::ExpectedFail,
            (false, false) => Status::Fail,
        }
    }
}

fn higuchi_row(
    name: &str,
    lo: f64,
    hi: f64,
    series: fractal_core::Result<TimeSeries>,
    config: &HiguchiConfig,
) -> Row {
    Row {
        name: name.to_string(),
        lo,
        hi,
        higuchi: true,
        outcome: series
            .and_then(|s| higuchi_dimension(&s, config))
            .map_err(|e| e.to_string()),
    }
}

fn weierstrass(dimension: f64) -> fractal_core::Result<TimeSeries> {
    let params = WeierstrassParams::for_dimension(dimension, 3.0)?;
    gen_weierstrass(&params, 32768.0, 1.0)
}

fn box_row(name: &str, lo: f64, hi: f64, outcome: fractal_core::Result<DimensionEstimate>) -> Row {
    Row {
        name: name.to_string(),
        lo,
        hi,
        higuchi: false,
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

fn rows(k_max: Option<usize>, grid: usize) -> Vec<Row> {
    let config = HiguchiConfig {
        k_max,
        k_schedule: None,
    };
    let triadic = |level: i32| (1..=level).map(|m| 3f64.powi(-m)).collect::<Vec<_>>();
    let julia = |params: JuliaParams| {
        gen_julia_boundary(&params).and_then(|set| box_dimension(&set, &default_box_sizes(&set)))
    };

    let mut rows = vec![
        higuchi_row(
            "ramp N=1000",
            1.0 - 1e-6,
            1.0 + 1e-6,
            gen_ramp(1000),
            &config,
        ),
        higuchi_row(
            "sine 440 Hz",
            0.0,
            1.03,
            gen_sine(440.0, 44100.0, 2.0, 0.8),
            &config,
        ),
        higuchi_row(
            "square 440 Hz",
            0.0,
            1.05,
            gen_square(440.0, 44100.0, 2.0, 0.8),
            &config,
        ),
        higuchi_row(
            "triangle 440 Hz",
            0.0,
            1.05,
            gen_triangle(440.0, 44100.0, 2.0, 0.8),
            &config,
        ),
    ];
    for (d, tol) in [(1.2, 0.08), (1.33, 0.07), (1.5, 0.08), (1.8, 0.08)] {
        rows.push(higuchi_row(
            &format!("weierstrass D={d}"),
            d - tol,
            d + tol,
            weierstrass(d),
            &config,
        ));
    }
    rows.push(higuchi_row(
        "white noise N=44100",
        1.9,
        2.05,
        gen_white_noise(0, 44100.0, 1.0, 1.0),
        &config,
    ));

    rows.push(box_row(
        "koch level 6",
        LOG3_4 - 0.05,
        LOG3_4 + 0.05,
        gen_koch(6).and_then(|s| box_dimension(&s, &triadic(6))),
    ));
    rows.push(box_row(
        "carpet level 5",
        LOG3_8 - 0.05,
        LOG3_8 + 0.05,
        gen_sierpinski_carpet(5).and_then(|s| box_dimension(&s, &triadic(5))),
    ));
    rows.push(box_row(
        "filled square",
        1.95,
        2.05,
        gen_filled_square(512)
            .and_then(|s| box_dimension(&s, &(1..=6).map(|m| 0.5f64.powi(m)).collect::<Vec<_>>())),
    ));
    rows.push(box_row(
        "segment",
        0.95,
        1.05,
        gen_segment(1000).and_then(|s| box_dimension(&s, &default_box_sizes(&s))),
    ));
    rows.push(box_row(
        "circle grid 512",
        0.95,
        1.05,
        julia(JuliaParams::circle(512)),
    ));
    rows.push(box_row(
        &format!("rabbit grid {grid}"),
        1.35,
        1.44,
        julia(JuliaParams::douady_rabbit(grid)),
    ));
    rows
}

pub fn run(k_max: Option<usize>, grid: usize) -> anyhow::Result<ExitCode> {
    if k_max == Some(0) {
        anyhow::bail!("--k-max must be positive");
    }
    let degraded = k_max.is_some_and(|k| k < DEFAULT_K_MAX);
    match k_max {
        Some(k) => println!("# k_max={k}"),
        None => println!("# k_max=default"),
    }
    println!(
        "{:<6} {:<22} {:>17} {:>10} {:>9}",
        "status", "check", "accepted", "measured", "r_squared"
    );
    let mut failures = 0;
    for row in rows(k_max, grid) {
        let status = row.status(degraded);
        let label = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::ExpectedFail => "XFAIL",
        };
        if status == Status::Fail {
            failures += 1;
        }
        let range = format!("[{:.4}, {:.4}]", row.lo, row.hi);
        match &row.outcome {
            Ok(e) => println!(
                "{label:<6} {:<22} {range:>17} {:>10.4} {:>9.4}",
                row.name, e.dimension, e.r_squared
            ),
            Err(msg) => println!(
                "{label:<6} {:<22} {range:>17} {:>10} {:>9}  {msg}",
                row.name, "-", "-"
            ),
        }
    }
    if failures == 0 {
        println!("# all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("# {failures} checks failed");
        Ok(ExitCode::from(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(higuchi: bool, outcome: Result<f64, &str>) -> Row {
        Row {
            name: "r".into(),
            lo: 1.0,
            hi: 1.1,
            higuchi,
            outcome: outcome
                .map(|d| DimensionEstimate {
                    dimension: d,
                    slope: -d,
                    intercept: 0.0,
                    r_squared: 1.0,
                    points: vec![],
                    excluded_count: 0,
                })
                .map_err(str::to_string),
        }
    }

    #[test]
    fn degraded_higuchi_rows_become_expected_failures() {
        assert!(matches!(row(true, Ok(1.05)).status(true), Status::Pass));
        assert!(matches!(row(true, Ok(1.2)).status(false), Status::Fail));
        assert!(matches!(
            row(true, Ok(1.2)).status(true),
            Status::ExpectedFail
        ));
        assert!(matches!(
            row(true, Err("x")).status(true),
            Status::ExpectedFail
        ));
        assert!(matches!(row(false, Ok(1.2)).status(true), Status::Fail));
    }
}
