use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::patch::PatchRecord;
use crate::corpus::taxonomy::{ClassTaxonomy, Level};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QType {
    YesNo,
    LandCover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid_input(format!("unknown split {other:?}"))),
        }
    }
}

/// One question/answer pair tied to a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub patch_id: String,
    pub question: String,
    pub qtype: QType,
    pub answer: String,
    pub split: Split,
}

/// Boolean presence expression over class ids; `And` binds tighter than `Or`
/// when built from an operator sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Class(usize),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    fn eval(&self, labels: &[u8]) -> Result<bool> {
        match self {
            BoolExpr::Class(id) => labels
                .get(*id)
                .map(|&b| b != 0)
                .ok_or_else(|| Error::invalid_input(format!("unknown class id {id}"))),
            BoolExpr::And(a, b) => Ok(a.eval(labels)? && b.eval(labels)?),
            BoolExpr::Or(a, b) => Ok(a.eval(labels)? || b.eval(labels)?),
        }
    }

    fn class_ids(&self, out: &mut Vec<usize>) {
        match self {
            BoolExpr::Class(id) => out.push(*id),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.class_ids(out);
                b.class_ids(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conjunction {
    And,
    Or,
}

/// Builds the expression for `terms[0] op[0] terms[1] op[1] ...` with standard
/// boolean precedence: runs of `and` reduce first, then the `or`s.
pub fn expr_from_terms(terms: &[usize], ops: &[Conjunction]) -> Result<BoolExpr> {
    if terms.is_empty() || ops.len() + 1 != terms.len() {
        return Err(Error::invalid_input(
            "expression needs n terms and n-1 operators",
        ));
    }
    let mut or_groups: Vec<BoolExpr> = Vec::new();
    let mut current = BoolExpr::Class(terms[0]);
    for (op, &term) in ops.iter().zip(&terms[1..]) {
        match op {
            Conjunction::And => {
                current = BoolExpr::And(Box::new(current), Box::new(BoolExpr::Class(term)));
            }
            Conjunction::Or => {
                or_groups.push(current);
                current = BoolExpr::Class(term);
            }
        }
    }
    or_groups.push(current);
    let mut expr = or_groups.remove(0);
    for g in or_groups {
        expr = BoolExpr::Or(Box::new(expr), Box::new(g));
    }
    Ok(expr)
}

/// Parsed form of a question, used to derive its canonical answer.
#[derive(Debug, Clone, PartialEq)]
pub enum QuestionAst {
    YesNo(BoolExpr),
    LandCover {
        level: Option<Level>,
        exclude: Vec<usize>,
    },
}

/// Evaluates a question against a label vector and returns the canonical
/// answer string: "yes"/"no" for presence questions, the present class names
/// in ascending-id order (or "None") for land-cover questions.
pub fn derive_answer(
    ast: &QuestionAst,
    labels: &[u8],
    taxonomy: &ClassTaxonomy,
) -> Result<String> {
    if labels.len() != taxonomy.n_classes() {
        return Err(Error::shape_mismatch(
            format!("{} label bits", taxonomy.n_classes()),
            labels.len(),
        ));
    }
    match ast {
        QuestionAst::YesNo(expr) => {
            let mut ids = Vec::new();
            expr.class_ids(&mut ids);
            for id in ids {
                taxonomy.entry(id)?;
            }
            Ok(if expr.eval(labels)? { "yes" } else { "no" }.to_string())
        }
        QuestionAst::LandCover { level, exclude } => {
            for id in exclude {
                taxonomy.entry(*id)?;
            }
            let names: Vec<&str> = (0..labels.len())
                .filter(|&id| labels[id] != 0)
                .filter(|id| level.map_or(true, |l| taxonomy.entries()[*id].level == l))
                .filter(|id| !exclude.contains(id))
                .map(|id| taxonomy.entries()[id].name.as_str())
                .collect();
            if names.is_empty() {
                Ok("None".to_string())
            } else {
                Ok(names.join(", "))
            }
        }
    }
}

/// Mixture proportions for generated questions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionConfig {
    /// Fraction of yes/no questions.
    pub yes_no_rate: f64,
    /// Fraction of yes/no questions with at least one conjunction.
    pub conj_geq1_rate: f64,
    /// Fraction of yes/no questions with exactly two conjunctions.
    pub conj_eq2_rate: f64,
}

impl Default for QuestionConfig {
    fn default() -> Self {
        Self {
            yes_no_rate: 0.807,
            conj_geq1_rate: 0.723,
            conj_eq2_rate: 0.271,
        }
    }
}

impl QuestionConfig {
    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.yes_no_rate) || !in_unit(self.conj_geq1_rate) || !in_unit(self.conj_eq2_rate)
        {
            return Err(Error::InvalidConfig(
                "question rates must lie in [0, 1]".into(),
            ));
        }
        if self.conj_eq2_rate > self.conj_geq1_rate {
            return Err(Error::InvalidConfig(
                "conj_eq2_rate cannot exceed conj_geq1_rate".into(),
            ));
        }
        Ok(())
    }
}

fn per_patch_rng(seed: u64, patch_id: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"question-gen\0");
    h.update(seed.to_le_bytes());
    h.update(patch_id.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn sample_distinct(rng: &mut ChaCha20Rng, n: usize, upper: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(n);
    while out.len() < n {
        let c = rng.gen_range(0..upper);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn render_yes_no(terms: &[usize], ops: &[Conjunction], taxonomy: &ClassTaxonomy) -> String {
    let mut text = String::from("Is there ");
    for (i, &t) in terms.iter().enumerate() {
        if i > 0 {
            text.push_str(match ops[i - 1] {
                Conjunction::And => " and ",
                Conjunction::Or => " or ",
            });
        }
        text.push_str(&taxonomy.entries()[t].name);
    }
    text.push_str(" in this image?");
    text
}

/// Generates `k` question/answer pairs for a patch with the default mixture.
///
/// The generator is a pure function of `(patch_id, labels, taxonomy, k, seed)`:
/// its RNG stream is derived from `(seed, patch_id)`, so corpus generation can
/// run per patch in any order and still produce identical records. Records are
/// created with `split = train`; the corpus builder reassigns splits from the
/// longitude partition.
pub fn generate_questions(
    patch: &PatchRecord,
    taxonomy: &ClassTaxonomy,
    k: usize,
    seed: u64,
) -> Result<Vec<QARecord>> {
    generate_questions_with(patch, taxonomy, &QuestionConfig::default(), k, seed)
}

pub fn generate_questions_with(
    patch: &PatchRecord,
    taxonomy: &ClassTaxonomy,
    cfg: &QuestionConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<QARecord>> {
    if k == 0 {
        return Err(Error::invalid_input("k must be >= 1"));
    }
    cfg.validate()?;
    if patch.labels.len() != taxonomy.n_classes() {
        return Err(Error::shape_mismatch(
            format!("{} label bits", taxonomy.n_classes()),
            patch.labels.len(),
        ));
    }
    if !taxonomy.labels_consistent(&patch.labels) {
        return Err(Error::invalid_input(format!(
            "patch {}: labels are not hierarchy-consistent",
            patch.patch_id
        )));
    }

    let n_c = taxonomy.n_classes();
    let mut levels: Vec<Level> = taxonomy.entries().iter().map(|e| e.level).collect();
    levels.sort();
    levels.dedup();

    let mut rng = per_patch_rng(seed, &patch.patch_id);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let (question, qtype, ast) = if rng.gen_bool(cfg.yes_no_rate) {
            let r: f64 = rng.gen();
            let n_conj = if r < cfg.conj_eq2_rate {
                2
            } else if r < cfg.conj_geq1_rate {
                1
            } else {
                0
            };
            let n_terms = (n_conj + 1).min(n_c);
            let terms = sample_distinct(&mut rng, n_terms, n_c);
            let ops: Vec<Conjunction> = (1..n_terms)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        Conjunction::And
                    } else {
                        Conjunction::Or
                    }
                })
                .collect();
            let text = render_yes_no(&terms, &ops, taxonomy);
            let expr = expr_from_terms(&terms, &ops)?;
            (text, QType::YesNo, QuestionAst::YesNo(expr))
        } else {
            // 0: all classes, 1: one hierarchy level, 2: all classes besides one
            let variant = rng.gen_range(0..3u8);
            match variant {
                0 => (
                    "What classes are present in the image?".to_string(),
                    QType::LandCover,
                    QuestionAst::LandCover {
                        level: None,
                        exclude: vec![],
                    },
                ),
                1 => {
                    let level = levels[rng.gen_range(0..levels.len())];
                    (
                        format!(
                            "What classes of level {} are present in the image?",
                            level.depth()
                        ),
                        QType::LandCover,
                        QuestionAst::LandCover {
                            level: Some(level),
                            exclude: vec![],
                        },
                    )
                }
                _ => {
                    // prefer a present class so the exclusion is informative
                    let present = patch.present_classes();
                    let excluded = if present.is_empty() {
                        rng.gen_range(0..n_c)
                    } else {
                        present[rng.gen_range(0..present.len())]
                    };
                    (
                        format!(
                            "Besides {}, what classes are present in the image?",
                            taxonomy.entries()[excluded].name
                        ),
                        QType::LandCover,
                        QuestionAst::LandCover {
                            level: None,
                            exclude: vec![excluded],
                        },
                    )
                }
            }
        };
        let answer = derive_answer(&ast, &patch.labels, taxonomy)?;
        out.push(QARecord {
            patch_id: patch.patch_id.clone(),
            question,
            qtype,
            answer,
            split: Split::Train,
        });
    }
    Ok(out)
}

/// Number of "and"/"or" conjunctions in a rendered yes/no question.
pub fn count_conjunctions(question: &str) -> usize {
    question
        .split_whitespace()
        .filter(|w| *w == "and" || *w == "or")
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn patch_with(labels: Vec<u8>, id: &str) -> PatchRecord {
        PatchRecord {
            patch_id: id.to_string(),
            lon: 0.0,
            lat: 0.0,
            optical: Array3::zeros((3, 4, 4)),
            sar: Array3::zeros((3, 4, 4)),
            labels,
        }
    }

    #[test]
    fn and_binds_tighter_than_or() {
        // A or B and C with labels {A}: Or(A, And(B, C)) = yes
        let labels = vec![1, 0, 0];
        let expr = expr_from_terms(&[0, 1, 2], &[Conjunction::Or, Conjunction::And]).unwrap();
        assert_eq!(
            expr,
            BoolExpr::Or(
                Box::new(BoolExpr::Class(0)),
                Box::new(BoolExpr::And(
                    Box::new(BoolExpr::Class(1)),
                    Box::new(BoolExpr::Class(2))
                ))
            )
        );
        assert!(expr.eval(&labels).unwrap());

        // A and B with labels {A} -> no
        let expr = expr_from_terms(&[0, 1], &[Conjunction::And]).unwrap();
        assert!(!expr.eval(&labels).unwrap());
    }

    #[test]
    fn derive_answer_set_difference() {
        let tax = ClassTaxonomy::synthetic(4).unwrap();
        // "Besides Class 00, what classes at L1?" with labels {0, 1} -> "Class 01"
        let ast = QuestionAst::LandCover {
            level: Some(Level::L1),
            exclude: vec![0],
        };
        let ans = derive_answer(&ast, &[1, 1, 0, 0], &tax).unwrap();
        assert_eq!(ans, "Class 01");
    }

    #[test]
    fn empty_label_set_answers_none() {
        let tax = ClassTaxonomy::synthetic(3).unwrap();
        let ast = QuestionAst::LandCover {
            level: None,
            exclude: vec![],
        };
        assert_eq!(derive_answer(&ast, &[0, 0, 0], &tax).unwrap(), "None");
    }

    #[test]
    fn unknown_class_id_rejected() {
        let tax = ClassTaxonomy::synthetic(3).unwrap();
        let ast = QuestionAst::YesNo(BoolExpr::Class(7));
        assert!(derive_answer(&ast, &[0, 0, 0], &tax).is_err());
        let ast = QuestionAst::LandCover {
            level: None,
            exclude: vec![9],
        };
        assert!(derive_answer(&ast, &[0, 0, 0], &tax).is_err());
    }

    #[test]
    fn generation_is_deterministic_per_patch_and_seed() {
        let tax = ClassTaxonomy::clc61();
        let mut labels = vec![0u8; 61];
        labels[tax.id_of("Forests").unwrap()] = 1;
        tax.close_labels(&mut labels);
        let patch = patch_with(labels, "p1");
        let a = generate_questions(&patch, &tax, 25, 7).unwrap();
        let b = generate_questions(&patch, &tax, 25, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_questions(&patch, &tax, 25, 8).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), 25);
    }

    #[test]
    fn single_class_presence_answers_yes() {
        let tax = ClassTaxonomy::clc61();
        let forests = tax.id_of("Forests").unwrap();
        let mut labels = vec![0u8; 61];
        labels[forests] = 1;
        tax.close_labels(&mut labels);
        let ast = QuestionAst::YesNo(BoolExpr::Class(forests));
        assert_eq!(derive_answer(&ast, &labels, &tax).unwrap(), "yes");
    }

    #[test]
    fn answers_stay_in_closed_answer_space() {
        let tax = ClassTaxonomy::clc61();
        let mut labels = vec![0u8; 61];
        for name in ["Forests", "Water courses", "Beaches, dunes, sands"] {
            labels[tax.id_of(name).unwrap()] = 1;
        }
        tax.close_labels(&mut labels);
        let patch = patch_with(labels, "closure");
        for rec in generate_questions(&patch, &tax, 400, 3).unwrap() {
            match rec.qtype {
                QType::YesNo => assert!(rec.answer == "yes" || rec.answer == "no"),
                QType::LandCover => {
                    let ids = tax.parse_answer(&rec.answer).unwrap();
                    // ids are ascending, i.e. canonical order
                    assert!(ids.windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_k_and_inconsistent_labels() {
        let tax = ClassTaxonomy::clc61();
        let patch = patch_with(vec![0u8; 61], "p");
        assert!(generate_questions(&patch, &tax, 0, 1).is_err());

        let mut labels = vec![0u8; 61];
        labels[tax.id_of("Forests").unwrap()] = 1; // L2 without its L1 ancestor
        let patch = patch_with(labels, "p");
        assert!(generate_questions(&patch, &tax, 5, 1).is_err());
    }

    #[test]
    fn mixture_tracks_configured_rates() {
        let tax = ClassTaxonomy::synthetic(10).unwrap();
        let mut yes_no = 0usize;
        let mut with_conj = 0usize;
        let mut two_conj = 0usize;
        let mut total = 0usize;
        for p in 0..400 {
            let patch = patch_with(vec![0u8; 10], &format!("p{p}"));
            for rec in generate_questions(&patch, &tax, 25, 1).unwrap() {
                total += 1;
                if rec.qtype == QType::YesNo {
                    yes_no += 1;
                    let c = count_conjunctions(&rec.question);
                    if c >= 1 {
                        with_conj += 1;
                    }
                    if c == 2 {
                        two_conj += 1;
                    }
                }
            }
        }
        let yn_frac = yes_no as f64 / total as f64;
        let conj_frac = with_conj as f64 / yes_no as f64;
        let two_frac = two_conj as f64 / yes_no as f64;
        assert!((yn_frac - 0.807).abs() < 0.01, "yes/no fraction {yn_frac}");
        assert!((conj_frac - 0.723).abs() < 0.02, "conj fraction {conj_frac}");
        assert!((two_frac - 0.271).abs() < 0.02, "two-conj fraction {two_frac}");
    }
}
