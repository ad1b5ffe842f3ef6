use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use regiongem::eval::{comparison_table, evaluate, read_external_results, EvalOptions};
use regiongem::index::{build_index, BuildReport};
use regiongem::ingest::{scan_class_folders, scan_csv_metadata, split_manifest, CsvOptions, Manifest};
use regiongem::sheet::{render_contact_sheet, save_png};
use regiongem::{
    build_masks, decode_image, load_index, make_region_spec, rank, save_index, BinConfig, Descriptor, FeatureIndex,
    RankedResult, Region, RgbImage,
};

use crate::args::{BinArgs, DatasetArgs, EvaluateArgs, IndexArgs, MasksArgs, QueryArgs};
use crate::config::{pick, resolve_bins, resolve_k_values, resolve_ratio, resolve_seed, FileConfig};

/// Region colors used by the `masks` subcommand, in canonical region order.
pub const MASK_COLORS: [[u8; 3]; 5] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [255, 225, 25],
    [255, 255, 255],
];

fn load_dataset(args: &DatasetArgs, out: &mut dyn Write) -> anyhow::Result<Manifest> {
    match (&args.class_folders, &args.csv, &args.images) {
        (Some(root), None, _) => Ok(scan_class_folders(root)?),
        (None, Some(csv), Some(images)) => {
            let options = CsvOptions {
                filter: Some(args.filter.parse()?),
                label_column: args.label_column.clone(),
                ..Default::default()
            };
            let (manifest, missing) = scan_csv_metadata(csv, images, &options)?;
            if !missing.is_empty() {
                writeln!(out, "# {} csv rows had no image file (first: id {})", missing.len(), missing[0].id)?;
            }
            if manifest.is_empty() {
                bail!("no images matched {} in {}", args.filter, csv.display());
            }
            Ok(manifest)
        }
        _ => bail!("pass either --class-folders DIR or --csv FILE --images DIR"),
    }
}

fn descriptor(bins: &BinArgs, file: &FileConfig) -> anyhow::Result<Descriptor> {
    let config = resolve_bins((bins.hue_bins, bins.sat_bins, bins.val_bins), file)?;
    Ok(Descriptor::new(config).with_max_dimension(bins.max_dimension.or(file.max_dimension)))
}

fn bins_header(config: &BinConfig, max_dimension: Option<u32>) -> String {
    let scale = max_dimension.map_or("off".to_string(), |d| format!("{d}px"));
    format!("bins {}/{}/{} downscale {scale}", config.hue_bins, config.sat_bins, config.val_bins)
}

fn write_report(report: &BuildReport, path: &Path) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    report.write_jsonl(&mut w)?;
    w.flush()?;
    Ok(())
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".errors.jsonl");
    PathBuf::from(name)
}

pub fn cmd_index(args: &IndexArgs, file: &FileConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let descriptor = descriptor(&args.bins, file)?;
    let manifest = load_dataset(&args.dataset, out)?;
    writeln!(out, "# {}", bins_header(&descriptor.config, descriptor.max_dimension))?;
    if let Some(path) = &args.manifest_out {
        let mut w = BufWriter::new(File::create(path)?);
        manifest.write_jsonl(&mut w)?;
        w.flush()?;
    }
    let (index, report) = build_index(&manifest, &descriptor)?;
    save_index(&index, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let report_path = args.report.clone().unwrap_or_else(|| default_report_path(&args.out));
    write_report(&report, &report_path)?;
    writeln!(
        out,
        "indexed {} images, {} classes",
        index.len(),
        index.class_labels().len()
    )?;
    if !report.is_empty() {
        writeln!(out, "skipped {} images, see {}", report.failures.len(), report_path.display())?;
    }
    Ok(())
}

/// Ranks one image file; shared by the CLI and the service tests.
pub fn query_index(index: &FeatureIndex, image_bytes: &[u8], k: usize) -> regiongem::Result<(RgbImage, RankedResult)> {
    let img = decode_image(image_bytes)?;
    let feature = index.descriptor().describe_rgb(&img)?;
    Ok((img, rank(&feature, index, k)?))
}

pub fn cmd_query(args: &QueryArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if args.k == 0 {
        bail!("k must be >= 1");
    }
    let index = load_index(&args.index).with_context(|| format!("loading {}", args.index.display()))?;
    let bytes = std::fs::read(&args.image).with_context(|| format!("reading {}", args.image.display()))?;
    let (img, result) = query_index(&index, &bytes, args.k).with_context(|| format!("describing {}", args.image.display()))?;
    writeln!(out, "# {} index entries, {}", index.len(), bins_header(index.config(), index.max_dimension()))?;
    for (i, hit) in result.hits.iter().enumerate() {
        writeln!(out, "{}\t{}\t{:.6}\t{}", i + 1, hit.image_id, hit.distance, hit.class_label)?;
    }
    if let Some(sheet_path) = &args.sheet {
        let query_path = args.image.to_string_lossy();
        let label = args
            .label
            .clone()
            .or_else(|| {
                let entry = index.entries().iter().find(|e| e.source_path == query_path)?;
                Some(entry.class_label.clone())
            })
            .unwrap_or_else(|| result.hits[0].class_label.clone());
        let sheet = render_contact_sheet(&img, &label, &result, |hit| {
            let entry = index.get(&hit.image_id).expect("ranked ids come from the index");
            decode_image(&std::fs::read(&entry.source_path)?)
        })?;
        save_png(&sheet, sheet_path)?;
        writeln!(out, "# contact sheet written to {}", sheet_path.display())?;
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, file: &FileConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let descriptor = descriptor(&args.bins, file)?;
    let seed = resolve_seed(args.seed, file);
    let ratio = resolve_ratio(args.ratio, file)?;
    let k_values = resolve_k_values(args.k_values.clone(), file)?;
    let manifest = load_dataset(&args.dataset, out)?;
    writeln!(
        out,
        "# dataset {} ({} images, {} classes) {} seed {seed} ratio {ratio} k {}",
        manifest.dataset_name,
        manifest.len(),
        manifest.class_count(),
        bins_header(&descriptor.config, descriptor.max_dimension),
        k_values.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    )?;

    let (database, queries) = match &args.queries {
        Some(root) => (manifest.clone(), scan_class_folders(root)?),
        None => {
            let split = split_manifest(&manifest, ratio, seed)?;
            (manifest.subset(&split.train_ids), manifest.subset(&split.test_ids))
        }
    };
    if queries.is_empty() {
        bail!("the test split is empty; every class has a single image");
    }
    let (index, build_report) = build_index(&database, &descriptor)?;
    if !build_report.is_empty() {
        writeln!(out, "# skipped {} undecodable database images", build_report.failures.len())?;
    }
    let options = EvalOptions {
        dataset_name: manifest.dataset_name.clone(),
        seed,
        ratio,
        k_values,
    };
    let report = evaluate(&index, &queries, &options)?;
    writeln!(
        out,
        "# {} queries against {} indexed images in {:.2}s",
        report.query_count(),
        index.len(),
        report.wall_time_secs
    )?;
    if !report.unknown_labels.is_empty() {
        writeln!(out, "# query labels absent from the index: {}", report.unknown_labels.join(", "))?;
    }
    writeln!(out, "{}", report.accuracy_row())?;
    if let Some(path) = &args.report {
        let mut w = BufWriter::new(File::create(path)?);
        report.write_jsonl(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.external {
        let external = read_external_results(BufReader::new(File::open(path)?))?;
        write!(out, "{}", comparison_table(&report, "regiongem", &external))?;
    }
    Ok(())
}

pub fn render_masks(width: u32, height: u32) -> regiongem::Result<RgbImage> {
    let masks = build_masks(&make_region_spec(width, height)?);
    RgbImage::from_fn(width, height, |x, y| {
        let i = (y * width + x) as usize;
        let region = Region::ALL
            .into_iter()
            .find(|r| masks.mask(*r)[i])
            .expect("masks partition the grid");
        MASK_COLORS[region.index()]
    })
}

pub fn cmd_masks(args: &MasksArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let img = render_masks(args.width, args.height)?;
    save_png(&img, &args.out)?;
    let spec = make_region_spec(args.width, args.height)?;
    writeln!(
        out,
        "center ({}, {}) axes ({}, {}) written to {}",
        spec.center_x,
        spec.center_y,
        spec.axis_x,
        spec.axis_y,
        args.out.display()
    )?;
    Ok(())
}

pub fn configure_jobs(flag: Option<usize>, file: &FileConfig) -> anyhow::Result<()> {
    let jobs = pick(flag, file.jobs, 0);
    if jobs > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(())
}
