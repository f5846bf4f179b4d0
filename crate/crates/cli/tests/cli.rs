use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tandem::synth::{generate, SynthConfig};
use tempfile::TempDir;

const STORY: &str = "Harry Potter walked into the Great Hall with Ron Weasley. \
Hermione Granger was already reading near the fire. \
Slytherin had won the House Cup for six years in a row. \
Dumbledore announced that Gryffindor would receive the House Cup this year. \
Neville Longbottom earned the final points for Gryffindor. \
Snape looked displeased as the Slytherin banners turned red. \
Hagrid waved from the staff table while Hermione Granger cheered. \
The feast went on late into the night and Ron Weasley ate too much.";

fn tandem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tandem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&raw).expect("valid schema")
}

fn assert_valid(schema_file: &str, v: &Value) {
    let validator = schema(schema_file);
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}\n{v:#}");
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }

    /// Indexes `text` with small chunks and returns (index path, stats JSON).
    fn index(&self, text: &str, extra: &[&str]) -> (String, Value) {
        let input = self.write("doc.txt", text);
        let out = self.path("doc.e2idx").to_str().unwrap().to_string();
        let mut args = vec!["index", input.as_str(), "-o", out.as_str(), "--chunk-size", "40", "--overlap", "5"];
        args.extend_from_slice(extra);
        let v = stdout_json(&tandem(&args));
        (out, v)
    }
}

#[test]
fn index_small_document() {
    let f = Fixture::new();
    let (path, v) = f.index(STORY, &[]);
    assert_valid("index.schema.json", &v);
    let stats = &v["stats"];
    assert_eq!(stats["chunk_count"], 3);
    assert!(stats["summary_count"].as_u64().unwrap() <= 1);
    assert_eq!(stats["summarizer_calls"], v["planned_summarizer_calls"]);
    assert!(Path::new(&path).exists());

    let info = stdout_json(&tandem(&["stats", "--index", &path]));
    assert_valid("index-info.schema.json", &info);
    assert_eq!(info["stats"], v["stats"]);
}

#[test]
fn reindexing_is_byte_identical() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let first = std::fs::read(&path).unwrap();
    f.index(STORY, &[]);
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn missing_input_is_usage_error() {
    let f = Fixture::new();
    let out = tandem(&["index", "/nonexistent/doc.txt", "-o", f.path("x.e2idx").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/doc.txt"));
    assert!(!f.path("x.e2idx").exists());
}

#[test]
fn bad_flags_are_usage_errors() {
    let f = Fixture::new();
    let input = f.write("doc.txt", STORY);
    let out = f.path("x.e2idx");
    let out = out.to_str().unwrap();
    assert_eq!(tandem(&["index", &input, "-o", out, "--chunk-size", "10", "--overlap", "10"]).status.code(), Some(2));
    assert_eq!(tandem(&["index", &input, "-o", out, "-g", "1"]).status.code(), Some(2));
    assert_eq!(tandem(&["frobnicate"]).status.code(), Some(2));
    let (index, _) = f.index(STORY, &[]);
    assert_eq!(tandem(&["query", &index]).status.code(), Some(2));
    assert_eq!(tandem(&["query", &index, "who?", "-k", "0"]).status.code(), Some(2));
}

#[test]
fn empty_document_is_a_runtime_failure() {
    let f = Fixture::new();
    let input = f.write("empty.txt", "   \n\n");
    let out = tandem(&["index", &input, "-o", f.path("e.e2idx").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupt_index_is_rejected() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    let out = tandem(&["query", &path, "Who won the House Cup?"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let garbage = f.write("garbage.e2idx", "not an index");
    assert_eq!(tandem(&["stats", "--index", &garbage]).status.code(), Some(2));
}

#[test]
fn local_query_names_the_pair() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let v = stdout_json(&tandem(&["query", &path, "Did Slytherin win the House Cup?"]));
    assert_valid("query.schema.json", &v);
    assert_eq!(v["mode"], "Local");
    assert!(v["formatted"].as_str().unwrap().starts_with("house cup-slytherin:\n"));
    assert!(!v["pairs"].as_array().unwrap().is_empty());
}

#[test]
fn entity_free_question_is_dense() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let v = stdout_json(&tandem(&["query", &path, "what happened late at night?"]));
    assert_valid("query.schema.json", &v);
    assert_eq!(v["mode"], "GlobalDense");
    assert_eq!(v["query_entities"], Value::Array(vec![]));
}

#[test]
fn dense_override() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let v = stdout_json(&tandem(&["query", &path, "Did Slytherin win the House Cup?", "--mode", "dense"]));
    assert_eq!(v["mode"], "GlobalDense");
    assert!(v["trace"].as_array().unwrap().iter().any(|t| t["step"] == "forced-dense"));
}

#[test]
fn batch_keeps_order() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let questions = ["Did Slytherin win the House Cup?", "", "what happened late at night?", "Who is Hagrid?"];
    let batch = f.write("q.txt", &questions.join("\n"));
    let out = tandem(&["query", &path, "--batch", &batch]);
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    let asked: Vec<&str> = lines.iter().map(|v| v["question"].as_str().unwrap()).collect();
    assert_eq!(asked, ["Did Slytherin win the House Cup?", "what happened late at night?", "Who is Hagrid?"]);
    for v in &lines {
        assert_valid("query.schema.json", v);
    }
}

#[test]
fn text_format() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let out = tandem(&["query", &path, "Did Slytherin win the House Cup?", "--format", "text"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("house cup-slytherin:\n"), "{text}");
}

#[test]
fn eval_empty_file() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let qa = f.write("qa.jsonl", "");
    let v = stdout_json(&tandem(&["eval", &path, &qa]));
    assert_valid("eval.schema.json", &v);
    assert_eq!(v["items"], 0);
    assert_eq!(v["accuracy"], Value::Null);
}

#[test]
fn eval_verbatim_answer_has_full_recall() {
    let f = Fixture::new();
    let (path, _) = f.index(STORY, &[]);
    let qa = f.write(
        "qa.jsonl",
        concat!(
            r#"{"id":"a","question":"Did Slytherin win the House Cup?","answer":"Slytherin had won the House Cup for six years in a row."}"#,
            "\n",
            "{not json\n",
        ),
    );
    let out = tandem(&["eval", &path, &qa, "--per-item"]);
    let v = stdout_json(&out);
    assert_valid("eval.schema.json", &v);
    assert_eq!(v["items"], 1);
    assert_eq!(v["skipped"][0]["line"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped"));
    assert_eq!(v["mean_rouge_l_recall"], 1.0);
    assert_eq!(v["results"][0]["id"], "a");
}

#[test]
fn eval_planted_multiple_choice() {
    let cfg = SynthConfig { tokens: 6_000, entities: 200, ..SynthConfig::default() };
    let corpus = generate(&cfg, 5);
    let f = Fixture::new();
    let input = f.write("synth.txt", &corpus.text);
    let index = f.path("synth.e2idx").to_str().unwrap().to_string();
    stdout_json(&tandem(&["index", &input, "-o", &index, "--chunk-size", "200", "--overlap", "20"]));

    // The distractor is the next pair's sentence, which never shares a chunk
    // with this pair's entities.
    let n = corpus.planted.len();
    let lines: Vec<String> = corpus
        .planted
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let other = &corpus.planted[(i + 1) % n].sentence;
            let (choices, gold) = if i % 2 == 0 { ([&p.sentence, other], 0) } else { ([other, &p.sentence], 1) };
            serde_json::json!({"id": format!("p{i}"), "question": p.question(), "choices": choices, "gold": gold})
                .to_string()
        })
        .collect();
    let qa = f.write("qa.jsonl", &lines.join("\n"));
    let v = stdout_json(&tandem(&["eval", &index, &qa, "--per-item"]));
    assert_valid("eval.schema.json", &v);
    assert_eq!(v["multiple_choice"], 5);
    assert_eq!(v["multiple_choice_correct"], 5, "{v:#}");
    assert_eq!(v["accuracy"], 1.0);
    assert_eq!(v["modes"]["Local"], 5);
}

#[test]
fn scaling_sweep() {
    let v = stdout_json(&tandem(&["stats", "--sizes", "2000,4000,6000", "--repeats", "1"]));
    assert_valid("scaling.schema.json", &v);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert_eq!(tandem(&["stats", "--sizes", "2000"]).status.code(), Some(2));
}
