use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{EvalSplit, ExperimentConfig};
use super::synth::{generate_synthetic_dataset, SyntheticShape};
use crate::aggregate::{aggregate, read_shape_features, select_parts, write_shape_features, ShapeFeature};
use crate::annotate::{
    build_geometry_gt, map_detections, read_annotations, write_annotations, BoxStage, CoverageReport, ViewAnnotation,
};
use crate::captioner::{train_captioner, CaptionerModel, TokenSequence, Vocabulary};
use crate::detector::{detect, finetune_detector, train_detector, DetectorModel};
use crate::error::{Error, IoContext, Result};
use crate::geometry::{voxelize_mesh, LabeledVoxelGrid, TriangleMesh};
use crate::metrics::{evaluate, Evaluation};
use crate::nn::TrainLog;
use crate::render::{render_view, viewpoints, Camera, ColorPalette, RenderMode, ViewImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Generate,
    Voxelize,
    Render,
    GenGt,
    TrainGeomDetector,
    TransferGt,
    FinetuneDetector,
    ExtractFeatures,
    TrainCaptioner,
    Caption,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Generate,
        Stage::Voxelize,
        Stage::Render,
        Stage::GenGt,
        Stage::TrainGeomDetector,
        Stage::TransferGt,
        Stage::FinetuneDetector,
        Stage::ExtractFeatures,
        Stage::TrainCaptioner,
        Stage::Caption,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Voxelize => "voxelize",
            Stage::Render => "render",
            Stage::GenGt => "gengt",
            Stage::TrainGeomDetector => "train-geom-detector",
            Stage::TransferGt => "transfer-gt",
            Stage::FinetuneDetector => "finetune-detector",
            Stage::ExtractFeatures => "extract-features",
            Stage::TrainCaptioner => "train-captioner",
            Stage::Caption => "caption",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this stage reads.
    pub fn upstream(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Generate => &[],
            Voxelize => &[Generate],
            Render => &[Generate, Voxelize],
            GenGt => &[Voxelize],
            TrainGeomDetector => &[Render, GenGt],
            TransferGt => &[Render, TrainGeomDetector],
            FinetuneDetector => &[Render, TrainGeomDetector, TransferGt],
            ExtractFeatures => &[Generate, Render, FinetuneDetector],
            TrainCaptioner => &[Generate, ExtractFeatures],
            Caption => &[Generate, ExtractFeatures, TrainCaptioner],
            Eval => &[Generate, Caption],
            Report => &[Eval],
        }
    }

    /// Config keys that influence this stage's outputs.
    fn config_keys(self) -> &'static [&'static str] {
        use Stage::*;
        match self {
            Generate => &["seed", "category", "geometry_shapes", "caption_train", "caption_test"],
            Voxelize => &["seed", "samples_per_face", "resolution"],
            Render => &["views", "image_size", "elevation"],
            GenGt => &["views", "image_size", "elevation", "min_pixels", "merge_boxes"],
            TrainGeomDetector => &[
                "seed",
                "feature_dim",
                "conv1_channels",
                "conv2_channels",
                "anchor_stride",
                "anchor_scales",
                "anchor_aspects",
                "min_foreground",
                "refine_steps",
                "lambda",
                "det_optimizer",
                "det_lr",
                "det_steps",
                "det_rois",
            ],
            TransferGt => &["transfer_threshold"],
            FinetuneDetector => &["seed", "lambda", "det_optimizer", "det_rois", "finetune_lr", "finetune_steps"],
            ExtractFeatures => &["rho", "pooling"],
            TrainCaptioner => &[
                "seed",
                "skip_absent",
                "hidden_dim",
                "embed_dim",
                "cap_optimizer",
                "cap_lr",
                "cap_steps",
                "cap_batch",
            ],
            Caption => &["max_caption_len", "eval_split"],
            Eval => &["eval_split"],
            Report => &[],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    /// Inputs unchanged since the last successful run.
    Skipped,
}

/// Written to `<stage>/manifest.json` after a stage succeeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub fingerprint: String,
    pub config: String,
    pub inputs: BTreeMap<String, String>,
    /// Shapes whose data this stage consumed.
    pub shape_ids: Vec<String>,
    /// sha256 of every output file, keyed by path relative to the stage dir.
    pub outputs: BTreeMap<String, String>,
    /// sha256 over `outputs`.
    pub digest: String,
}

const MANIFEST: &str = "manifest.json";

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn list_files(dir: &Path, prefix: &str, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir).at(dir)?.collect::<std::io::Result<_>>().at(dir)?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let name = e.file_name().to_string_lossy().into_owned();
        let path = e.path();
        let rel = if prefix.is_empty() { name.clone() } else { format!("{prefix}/{name}") };
        if path.is_dir() {
            list_files(&path, &rel, out)?;
        } else if rel != MANIFEST {
            out.push((rel, path));
        }
    }
    Ok(())
}

fn hash_outputs(dir: &Path) -> Result<(BTreeMap<String, String>, String)> {
    let mut files = Vec::new();
    list_files(dir, "", &mut files)?;
    let mut outputs = BTreeMap::new();
    for (rel, path) in files {
        outputs.insert(rel, hex(&fs::read(&path).at(&path)?));
    }
    let joined: String = outputs.iter().map(|(k, v)| format!("{k} {v}\n")).collect();
    let digest = hex(joined.as_bytes());
    Ok((outputs, digest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeRole {
    /// Uncolored shape used for geometry ground truth.
    Geometry,
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub id: String,
    pub role: ShapeRole,
    pub caption: String,
    pub palette: Vec<[u8; 3]>,
}

/// A run directory with one subdirectory per stage.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: ExperimentConfig,
    pub root: PathBuf,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, root: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            root: root.into(),
        })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    pub fn read_manifest(&self, stage: Stage) -> Result<Option<Manifest>> {
        let path = self.stage_dir(stage).join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_slice(&fs::read(&path).at(&path)?)?))
    }

    fn fingerprint(&self, stage: Stage) -> Result<(String, BTreeMap<String, String>)> {
        let mut inputs = BTreeMap::new();
        for &up in stage.upstream() {
            match self.read_manifest(up)? {
                Some(m) => inputs.insert(up.name().to_string(), m.digest),
                None => {
                    return Err(Error::MissingStage {
                        stage: stage.name().into(),
                        missing: up.name().into(),
                        path: self.stage_dir(up).join(MANIFEST),
                    })
                }
            };
        }
        let mut text = format!("stage={}\n{}", stage.name(), self.stage_config(stage));
        for (k, v) in &inputs {
            let _ = writeln!(text, "input:{k}={v}");
        }
        Ok((hex(text.as_bytes()), inputs))
    }

    /// The report echoes the whole config, so it depends on all of it.
    fn stage_config(&self, stage: Stage) -> String {
        match stage {
            Stage::Report => self.config.to_text(),
            _ => self.config.subset(stage.config_keys()),
        }
    }

    /// Runs `stage` unless its manifest shows identical inputs and intact
    /// outputs.
    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        let (fingerprint, inputs) = self.fingerprint(stage)?;
        let dir = self.stage_dir(stage);
        if let Some(m) = self.read_manifest(stage)? {
            if m.fingerprint == fingerprint && hash_outputs(&dir)?.1 == m.digest {
                return Ok(StageOutcome::Skipped);
            }
        }
        if dir.exists() {
            fs::remove_dir_all(&dir).at(&dir)?;
        }
        fs::create_dir_all(&dir).at(&dir)?;
        let shape_ids = self.execute(stage, &dir)?;
        let (outputs, digest) = hash_outputs(&dir)?;
        let manifest = Manifest {
            stage: stage.name().into(),
            fingerprint,
            config: self.stage_config(stage),
            inputs,
            shape_ids,
            outputs,
            digest,
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, serde_json::to_vec_pretty(&manifest)?).at(&path)?;
        Ok(StageOutcome::Ran)
    }

    /// Runs every stage in order, returning what each one did.
    pub fn run_all(&self) -> Result<Vec<(Stage, StageOutcome)>> {
        Stage::ALL.into_iter().map(|s| Ok((s, self.run_stage(s)?))).collect()
    }

    fn execute(&self, stage: Stage, dir: &Path) -> Result<Vec<String>> {
        match stage {
            Stage::Generate => self.generate(dir),
            Stage::Voxelize => self.voxelize(dir),
            Stage::Render => self.render(dir),
            Stage::GenGt => self.gengt(dir),
            Stage::TrainGeomDetector => self.train_geom(dir),
            Stage::TransferGt => self.transfer(dir),
            Stage::FinetuneDetector => self.finetune(dir),
            Stage::ExtractFeatures => self.extract(dir),
            Stage::TrainCaptioner => self.train_captioner(dir),
            Stage::Caption => self.caption(dir),
            Stage::Eval => self.eval(dir),
            Stage::Report => self.report(dir),
        }
    }

    pub fn cameras(&self) -> Result<Vec<Camera>> {
        viewpoints(self.config.views, self.config.elevation, self.config.image_size)
    }

    pub fn shapes(&self) -> Result<Vec<ShapeRecord>> {
        let path = self.stage_dir(Stage::Generate).join("shapes.json");
        Ok(serde_json::from_slice(&fs::read(&path).at(&path)?)?)
    }

    fn shapes_with(&self, pred: impl Fn(&ShapeRole) -> bool) -> Result<Vec<ShapeRecord>> {
        Ok(self.shapes()?.into_iter().filter(|s| pred(&s.role)).collect())
    }

    fn eval_shapes(&self) -> Result<Vec<ShapeRecord>> {
        let want = match self.config.eval_split {
            EvalSplit::Train => ShapeRole::Train,
            EvalSplit::Test => ShapeRole::Test,
        };
        self.shapes_with(|r| *r == want)
    }

    fn grid(&self, id: &str) -> Result<LabeledVoxelGrid> {
        LabeledVoxelGrid::read(&self.stage_dir(Stage::Voxelize).join(format!("{id}.vox")))
    }

    pub fn view_path(&self, id: &str, view: usize, colored: bool) -> PathBuf {
        let sub = if colored { "colored" } else { "geometry" };
        self.stage_dir(Stage::Render).join(sub).join(format!("{id}_{view:02}.ppm"))
    }

    pub fn load_view(&self, id: &str, view: usize, colored: bool) -> Result<ViewImage> {
        let mode = if colored { RenderMode::Colored } else { RenderMode::Geometry };
        ViewImage::read_ppm(&self.view_path(id, view, colored), mode)
    }

    fn views_of(&self, anns: &[ViewAnnotation], colored: bool) -> Result<Vec<(ViewImage, ViewAnnotation)>> {
        anns.iter()
            .map(|a| Ok((self.load_view(&a.shape_id, a.view_index, colored)?, a.clone())))
            .collect()
    }

    fn generate(&self, dir: &Path) -> Result<Vec<String>> {
        let c = &self.config;
        let geo = generate_synthetic_dataset(c.geometry_shapes, c.seed.wrapping_mul(2).wrapping_add(1), c.category)?;
        let cap = generate_synthetic_dataset(
            c.caption_train + c.caption_test,
            c.seed.wrapping_mul(2).wrapping_add(2),
            c.category,
        )?;
        let mesh_dir = dir.join("meshes");
        fs::create_dir_all(&mesh_dir).at(&mesh_dir)?;
        let mut records = Vec::new();
        let mut emit = |shape: &SyntheticShape, id: String, role: ShapeRole| -> Result<()> {
            let (obj, labels) = shape.mesh.to_obj();
            let p = mesh_dir.join(format!("{id}.obj"));
            fs::write(&p, obj).at(&p)?;
            let p = mesh_dir.join(format!("{id}.labels"));
            fs::write(&p, labels).at(&p)?;
            records.push(ShapeRecord {
                id,
                role,
                caption: shape.caption.clone(),
                palette: shape.palette.colors().to_vec(),
            });
            Ok(())
        };
        for s in &geo {
            emit(s, format!("geo_{}", s.id), ShapeRole::Geometry)?;
        }
        for (i, s) in cap.iter().enumerate() {
            let role = if i < c.caption_train { ShapeRole::Train } else { ShapeRole::Test };
            emit(s, s.id.clone(), role)?;
        }
        let p = dir.join("shapes.json");
        fs::write(&p, serde_json::to_vec_pretty(&records)?).at(&p)?;
        Ok(records.into_iter().map(|r| r.id).collect())
    }

    fn voxelize(&self, dir: &Path) -> Result<Vec<String>> {
        let mesh_dir = self.stage_dir(Stage::Generate).join("meshes");
        let c = self.config.num_classes();
        let mut warnings = String::new();
        let mut ids = Vec::new();
        for (i, s) in self.shapes()?.iter().enumerate() {
            let mesh = TriangleMesh::read_obj(
                &mesh_dir.join(format!("{}.obj", s.id)),
                &mesh_dir.join(format!("{}.labels", s.id)),
                c,
            )?;
            let seed = self.config.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let (grid, degenerate) = voxelize_mesh(&mesh, self.config.samples_per_face, self.config.resolution, seed)?;
            for d in degenerate {
                let _ = writeln!(warnings, "{} face {} area {:e}", s.id, d.face, d.area);
            }
            grid.write(&dir.join(format!("{}.vox", s.id)))?;
            ids.push(s.id.clone());
        }
        let p = dir.join("degenerate_faces.txt");
        fs::write(&p, warnings).at(&p)?;
        Ok(ids)
    }

    fn render(&self, dir: &Path) -> Result<Vec<String>> {
        let cams = self.cameras()?;
        for sub in ["geometry", "colored"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).at(&p)?;
        }
        let mut ids = Vec::new();
        for s in self.shapes()? {
            let grid = self.grid(&s.id)?;
            let palette = ColorPalette::new(s.palette.clone())?;
            for (v, cam) in cams.iter().enumerate() {
                render_view(&grid, cam, None).write_ppm(&self.view_path(&s.id, v, false))?;
                if s.role != ShapeRole::Geometry {
                    render_view(&grid, cam, Some(&palette)).write_ppm(&self.view_path(&s.id, v, true))?;
                }
            }
            ids.push(s.id);
        }
        Ok(ids)
    }

    fn gengt(&self, dir: &Path) -> Result<Vec<String>> {
        let cams = self.cameras()?;
        let mut all = Vec::new();
        let mut coverage = CoverageReport::default();
        let mut ids = Vec::new();
        for s in self.shapes_with(|r| *r == ShapeRole::Geometry)? {
            let grid = self.grid(&s.id)?;
            let (anns, cov) =
                build_geometry_gt(&s.id, &grid, &cams, self.config.min_pixels, self.config.box_grouping());
            coverage.absorb(&cov);
            all.extend(anns);
            ids.push(s.id);
        }
        write_annotations(&dir.join("geometry_gt.jsonl"), &all, BoxStage::GeometryGt)?;
        let p = dir.join("coverage.json");
        fs::write(&p, serde_json::to_vec_pretty(&coverage)?).at(&p)?;
        Ok(ids)
    }

    fn write_log(dir: &Path, log: &TrainLog) -> Result<()> {
        let text: String = log.losses.iter().enumerate().map(|(i, l)| format!("{i}\t{l:.6}\n")).collect();
        let p = dir.join("losses.tsv");
        fs::write(&p, text).at(&p)
    }

    fn detector_path(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("detector.ckpt")
    }

    fn train_geom(&self, dir: &Path) -> Result<Vec<String>> {
        let anns = read_annotations(&self.stage_dir(Stage::GenGt).join("geometry_gt.jsonl"))?;
        let data = self.views_of(&anns, false)?;
        let (model, log) = train_detector(
            &data,
            self.config.detector_config(),
            &self.config.detector_train_config(false),
        )?;
        model.save(&dir.join("detector.ckpt"))?;
        Self::write_log(dir, &log)?;
        Ok(unique_ids(&anns))
    }

    fn transfer(&self, dir: &Path) -> Result<Vec<String>> {
        let model = DetectorModel::load(&self.detector_path(Stage::TrainGeomDetector))?;
        let mut anns = Vec::new();
        let mut ids = Vec::new();
        for s in self.shapes_with(|r| *r == ShapeRole::Train)? {
            for v in 0..self.config.views {
                let view = self.load_view(&s.id, v, false)?;
                let dets: Vec<_> = detect(&model, &view, v, 0.0).iter().map(|d| d.to_part_box()).collect();
                anns.push(ViewAnnotation {
                    shape_id: s.id.clone(),
                    view_index: v,
                    boxes: map_detections(&dets, self.config.transfer_threshold),
                });
            }
            ids.push(s.id);
        }
        write_annotations(&dir.join("transferred_gt.jsonl"), &anns, BoxStage::TransferredGt)?;
        Ok(ids)
    }

    fn finetune(&self, dir: &Path) -> Result<Vec<String>> {
        let model = DetectorModel::load(&self.detector_path(Stage::TrainGeomDetector))?;
        let anns = read_annotations(&self.stage_dir(Stage::TransferGt).join("transferred_gt.jsonl"))?;
        let data = self.views_of(&anns, true)?;
        let (model, log) = finetune_detector(&model, &data, &self.config.detector_train_config(true))?;
        model.save(&dir.join("detector.ckpt"))?;
        Self::write_log(dir, &log)?;
        Ok(unique_ids(&anns))
    }

    fn extract(&self, dir: &Path) -> Result<Vec<String>> {
        let model = DetectorModel::load(&self.detector_path(Stage::FinetuneDetector))?;
        let agg = self.config.aggregation_config();
        let mut features = Vec::new();
        let mut summary = String::from("shape_id\tdetections\tselected\tpresent\n");
        for s in self.shapes_with(|r| *r != ShapeRole::Geometry)? {
            let mut dets = Vec::new();
            for v in 0..self.config.views {
                dets.extend(detect(&model, &self.load_view(&s.id, v, true)?, v, 0.0));
            }
            let selected = select_parts(&dets, agg.rho);
            let f = aggregate(&selected, &agg)?;
            let present: String = f.present.iter().map(|&p| if p { '1' } else { '0' }).collect();
            let _ = writeln!(summary, "{}\t{}\t{}\t{}", s.id, dets.len(), selected.len(), present);
            features.push((s.id, f));
        }
        write_shape_features(&dir.join("features.bin"), &features)?;
        let p = dir.join("summary.tsv");
        fs::write(&p, summary).at(&p)?;
        Ok(features.into_iter().map(|(id, _)| id).collect())
    }

    fn features(&self) -> Result<BTreeMap<String, ShapeFeature>> {
        Ok(read_shape_features(&self.stage_dir(Stage::ExtractFeatures).join("features.bin"))?
            .into_iter()
            .collect())
    }

    fn train_captioner(&self, dir: &Path) -> Result<Vec<String>> {
        let train = self.shapes_with(|r| *r == ShapeRole::Train)?;
        let vocab = Vocabulary::build(train.iter().map(|s| s.caption.as_str()));
        let features = self.features()?;
        let data: Vec<(ShapeFeature, TokenSequence)> = train
            .iter()
            .map(|s| {
                let f = features
                    .get(&s.id)
                    .ok_or_else(|| Error::Format(format!("no features for `{}`", s.id)))?;
                Ok((f.clone(), vocab.encode(&s.caption)))
            })
            .collect::<Result<_>>()?;
        let (model, log) = train_captioner(
            &data,
            self.config.captioner_config(vocab.len()),
            &self.config.captioner_train_config(),
        )?;
        vocab.write(&dir.join("vocab.txt"))?;
        model.save(&dir.join("captioner.ckpt"))?;
        Self::write_log(dir, &log)?;
        Ok(train.into_iter().map(|s| s.id).collect())
    }

    fn caption(&self, dir: &Path) -> Result<Vec<String>> {
        let cap_dir = self.stage_dir(Stage::TrainCaptioner);
        let vocab = Vocabulary::read(&cap_dir.join("vocab.txt"))?;
        let model = CaptionerModel::load(&cap_dir.join("captioner.ckpt"))?;
        let features = self.features()?;
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in self.eval_shapes()? {
            let f = features
                .get(&s.id)
                .ok_or_else(|| Error::Format(format!("no features for `{}`", s.id)))?;
            let seq = model.generate_caption(f, self.config.max_caption_len)?;
            out.insert(s.id, vec![vocab.decode(&seq)]);
        }
        let p = dir.join("captions.json");
        fs::write(&p, serde_json::to_vec_pretty(&out)?).at(&p)?;
        Ok(out.into_keys().collect())
    }

    fn eval(&self, dir: &Path) -> Result<Vec<String>> {
        let p = self.stage_dir(Stage::Caption).join("captions.json");
        let cands: BTreeMap<String, Vec<String>> = serde_json::from_slice(&fs::read(&p).at(&p)?)?;
        let cands: BTreeMap<String, String> = cands
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().next().unwrap_or_default()))
            .collect();
        let refs: BTreeMap<String, Vec<String>> = self
            .eval_shapes()?
            .into_iter()
            .map(|s| (s.id, vec![s.caption]))
            .collect();
        let evaluation = evaluate(&cands, &refs)?;
        let p = dir.join("references.json");
        fs::write(&p, serde_json::to_vec_pretty(&refs)?).at(&p)?;
        let p = dir.join("metrics.json");
        fs::write(&p, serde_json::to_vec_pretty(&evaluation)?).at(&p)?;
        let p = dir.join("samples.tsv");
        fs::write(&p, evaluation.samples_tsv()).at(&p)?;
        Ok(refs.into_keys().collect())
    }

    pub fn evaluation(&self) -> Result<Evaluation> {
        let p = self.stage_dir(Stage::Eval).join("metrics.json");
        Ok(serde_json::from_slice(&fs::read(&p).at(&p)?)?)
    }

    fn report(&self, dir: &Path) -> Result<Vec<String>> {
        let e = self.evaluation()?;
        let split = match self.config.eval_split {
            EvalSplit::Train => "train",
            EvalSplit::Test => "test",
        };
        let mut text = String::from("# partcap report\n#\n# config\n");
        for line in self.config.to_text().lines() {
            let _ = writeln!(text, "#   {line}");
        }
        let _ = writeln!(text, "#\n# split: {split} ({} shapes)", e.samples.len());
        text.push_str("# METEOR uses exact unigram matches only (no stemming or synonyms)\n\n");
        text.push_str(&e.table_text());
        let cb: Vec<String> = e.corpus_bleu.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(text, "\ncorpus BLEU-1..4: {}", cb.join(" "));
        let _ = writeln!(text, "exact match: {:.4}", e.exact_match_rate);
        let p = dir.join("report.txt");
        fs::write(&p, &text).at(&p)?;
        let json = serde_json::json!({
            "config": self.config.entries().into_iter().collect::<BTreeMap<_, _>>(),
            "split": split,
            "metrics": crate::metrics::COLUMNS.iter().zip(e.table).map(|(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>(),
            "corpus_bleu": e.corpus_bleu,
            "exact_match": e.exact_match_rate,
        });
        let p = dir.join("report.json");
        fs::write(&p, serde_json::to_vec_pretty(&json)?).at(&p)?;
        Ok(e.samples.into_iter().map(|s| s.shape_id).collect())
    }
}

fn unique_ids(anns: &[ViewAnnotation]) -> Vec<String> {
    let mut ids: Vec<String> = anns.iter().map(|a| a.shape_id.clone()).collect();
    ids.dedup();
    ids
}
