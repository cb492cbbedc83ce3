use std::fs;
use std::path::PathBuf;

use imtrans_core::gradcheck::{self, OpReport};
use imtrans_core::models::{patchgan_spec, receptive_field as field, PatchVariant};

use crate::error::{CliError, Result};
use crate::manifest::Manifest;

#[derive(Debug, Clone)]
pub struct GradcheckArgs {
    /// `all` or a single op name.
    pub ops: String,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn report_lines(reports: &[OpReport]) -> String {
    let mut s = format!("{:<20} {:>6} {:>14}  result\n", "op", "trials", "max_rel_error");
    for r in reports {
        let verdict = if r.passed() { "ok" } else { "FAIL" };
        s.push_str(&format!("{:<20} {:>6} {:>14.6e}  {verdict}\n", r.name, r.trials, r.max_rel_error));
    }
    s
}

/// Run the finite-difference checks, print one line per op and fail with a
/// numeric error if any op exceeds the tolerance.
pub fn gradcheck(args: &GradcheckArgs) -> Result<Vec<OpReport>> {
    if args.trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let selected: Vec<&gradcheck::GradOp> = if args.ops == "all" {
        gradcheck::ops().iter().collect()
    } else {
        args.ops
            .split(',')
            .map(|name| gradcheck::find(name.trim()))
            .collect::<std::result::Result<_, _>>()?
    };
    let mut manifest = Manifest::begin("gradcheck");
    manifest.setting("ops", &args.ops);
    manifest.setting("trials", args.trials);
    manifest.setting("seed", args.seed);
    let mut reports = Vec::with_capacity(selected.len());
    for op in selected {
        reports.push(op.check(args.trials, args.seed)?);
    }
    let text = report_lines(&reports);
    print!("{text}");
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if let Some(out) = &args.out {
        let path = out.join("gradcheck.txt");
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        manifest.files.push(path);
        manifest.finish(out, if failed.is_empty() { "completed" } else { "failed" })?;
    }
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Numeric(format!(
            "relative error above {:e} in: {}",
            gradcheck::TOLERANCE,
            failed.join(", ")
        )))
    }
}

#[derive(Debug, Clone)]
pub struct ReceptiveFieldArgs {
    /// Every variant when empty.
    pub variants: Vec<PatchVariant>,
    pub out: Option<PathBuf>,
}

/// Analytical receptive field of each discriminator variant; a field that
/// differs from the variant's nominal size is a numeric failure.
pub fn receptive_field(args: &ReceptiveFieldArgs) -> Result<Vec<(PatchVariant, usize)>> {
    let variants = if args.variants.is_empty() {
        PatchVariant::ALL.to_vec()
    } else {
        args.variants.clone()
    };
    let mut text = String::new();
    let mut results = Vec::with_capacity(variants.len());
    let mut wrong = Vec::new();
    for v in variants {
        let r = field(&patchgan_spec(6, v, 64))?;
        text.push_str(&format!("{v} {r}\n"));
        if r != v.nominal() {
            wrong.push(format!("{v} has receptive field {r}"));
        }
        results.push((v, r));
    }
    print!("{text}");
    if let Some(out) = &args.out {
        let mut manifest = Manifest::begin("receptive-field");
        let path = out.join("receptive_field.txt");
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        manifest.files.push(path);
        manifest.finish(out, if wrong.is_empty() { "completed" } else { "failed" })?;
    }
    if wrong.is_empty() {
        Ok(results)
    } else {
        Err(CliError::Numeric(wrong.join("; ")))
    }
}
