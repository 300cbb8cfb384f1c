//! Acceptance suite: one test per criterion, each printing a pass line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use npchunk::chunker::{
    brute_force_chunk, chunk_sentence, s_function, single_token_chunks, Scorer,
};
use npchunk::corpus::{
    default_tag_map, parse_susanne_stream, read_vertical_tagged, records_to_sentence, TaggedSentence, Token,
};
use npchunk::eval::{
    classify_extracted_nps, np_taxonomy_counts, precision_recall, round2, ContingencyTable,
    NpPredicate,
};
use npchunk::fsm::{default_fsm_spec, extract_noun_phrases};
use npchunk::grammar::{ChunkLabel, Context, GrammarModel, TrainingCounts};
use npchunk::heads::{
    assign_heads, assign_heads_sequence, default_semantic_table, default_syntactic_table,
};
use npchunk::pipeline::{evaluate_groups, train_model, Stages};
use npchunk::tree::{ParseChild, ParseNode};

fn pass(criterion: &str, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

fn sentence_from(tags: &[&str]) -> TaggedSentence {
    TaggedSentence {
        tokens: tags.iter().enumerate().map(|(i, t)| Token::new(format!("w{i}"), *t)).collect(),
        source_id: None,
    }
}

fn random_label(rng: &mut ChaCha8Rng, alphabet: &[&str], max_len: usize) -> ChunkLabel {
    let len = rng.gen_range(1..=max_len);
    let tags: Vec<&str> = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
    ChunkLabel::from_tags(&tags)
}

fn random_model(rng: &mut ChaCha8Rng, alphabet: &[&str]) -> GrammarModel {
    let n_instances = rng.gen_range(1..10);
    let instances: Vec<ChunkLabel> =
        (0..n_instances).map(|_| random_label(rng, alphabet, 3)).collect();
    let n_pairs = rng.gen_range(0..10);
    let pairs: Vec<(Context, ChunkLabel)> = (0..n_pairs)
        .map(|_| {
            let ctx = if rng.gen_bool(0.25) {
                Context::Begin
            } else {
                Context::Chunk(random_label(rng, alphabet, 3))
            };
            (ctx, random_label(rng, alphabet, 3))
        })
        .collect();
    GrammarModel::fit_from_instances(&instances, &pairs).unwrap()
}

/// Criterion 1: the dynamic program matches the exhaustive oracle on 1000
/// randomized (model, sentence) pairs, exactly in segmentation and within
/// 1e-9 in score, in under 30 seconds.
#[test]
fn criterion_1_dp_vs_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let alphabet = ["A", "B", "C", "D", "E", "F"];
    let rounds = 1000;
    for round in 0..rounds {
        let n = rng.gen_range(1..=8);
        let tags: Vec<&str> =
            (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        let sent = sentence_from(&tags);
        let model = random_model(&mut rng, &alphabet);
        let scorer = Scorer::new(&model);

        let dp = chunk_sentence(&sent, &scorer, None).unwrap();
        let bf = brute_force_chunk(&sent, &scorer, None).unwrap();
        assert_eq!(
            dp.chunks, bf.chunks,
            "round {round}: segmentations differ (model {model:?}, tags {tags:?})"
        );
        assert!(
            (dp.total_score - bf.total_score).abs() <= 1e-9,
            "round {round}: scores differ: {} vs {}",
            dp.total_score,
            bf.total_score
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, limit 30 s");
    pass("1 dp-vs-oracle", format!("{rounds} randomized pairs in {elapsed:?}"));
}

/// Criterion 2: score-function laws.
#[test]
fn criterion_2_score_function_laws() {
    assert_eq!(s_function(0.0).unwrap(), 0.0);
    assert_eq!(s_function(1.0).unwrap(), 1.0);
    let grid = 10_000;
    let mut prev = 0.0f64;
    for k in 1..=grid {
        let p = k as f64 / grid as f64;
        let s = s_function(p).unwrap();
        assert!(s > 0.0 && s <= 1.0, "range violation at p={p}: s={s}");
        assert!(s > prev, "monotonicity violation at p={p}");
        prev = s;
    }
    pass("2 score-function-laws", format!("strictly increasing on a {grid}-point grid"));
}

/// Criterion 3: the committed fixture model chunks example (2) as
/// [parsing] [can be viewed] [as optimization] [.].
#[test]
fn criterion_3_example2_golden() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/example2.model");
    let model = GrammarModel::load(std::path::Path::new(path)).unwrap();
    let scorer = Scorer::new(&model);
    let sent = read_vertical_tagged(
        "parsing_NNS can_MD be_BE viewed_VBN as_IN optimization_NN ._.",
    )
    .unwrap()
    .remove(0);
    let seq = chunk_sentence(&sent, &scorer, None).unwrap();
    let chunks: Vec<String> = seq.chunks.iter().map(|c| c.words.join(" ")).collect();
    assert_eq!(chunks, vec!["parsing", "can be viewed", "as optimization", "."]);
    pass("3 example2-golden", format!("[{}]", chunks.join("] [")));
}

/// Criterion 4: head-assignment goldens.
#[test]
fn criterion_4_head_goldens() {
    let syn = default_syntactic_table();
    let sem = default_semantic_table();

    let sent = read_vertical_tagged("as_IN optimization_NN").unwrap().remove(0);
    let chunks = vec![npchunk::chunker::Chunk {
        start: 0,
        end: 2,
        label: ChunkLabel::from_tags(&["IN", "NN"]),
        words: vec!["as".into(), "optimization".into()],
    }];
    let headed = assign_heads(&chunks[0], &syn, &sem);
    assert_eq!(headed.syntactic_head, 0, "preposition heads the PP syntactically");
    assert_eq!(headed.semantic_head, 1, "noun heads the PP semantically");
    drop(sent);

    let hvd = npchunk::chunker::Chunk {
        start: 0,
        end: 2,
        label: ChunkLabel::from_tags(&["HVD", "VBN"]),
        words: vec!["had".into(), "left".into()],
    };
    let headed = assign_heads(&hvd, &syn, &sem);
    assert_eq!(headed.syntactic_head, 1, "VB* outranks HV*");
    assert_eq!(headed.semantic_head, 1);

    for tag in ["CS", "NN", "IN", "VBD", "UH"] {
        let one = npchunk::chunker::Chunk {
            start: 3,
            end: 4,
            label: ChunkLabel::from_tags(&[tag]),
            words: vec!["w".into()],
        };
        let headed = assign_heads(&one, &syn, &sem);
        assert_eq!((headed.syntactic_head, headed.semantic_head), (3, 3));
    }
    pass("4 head-goldens", "IN+NN, HVD+VBN, one-word chunks".to_string());
}

/// Criterion 5: NP extraction over the full sample text reproduces every
/// printed bracket group, span-exactly, including the "of" connection of
/// (18) and the non-connection over "over a husband eyes".
#[test]
fn criterion_5_appendix_golden() {
    let text = include_str!("data/appendix.vt");
    let golden: Vec<&str> = include_str!("data/appendix_np_groups.txt")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .collect();

    let syn = default_syntactic_table();
    let sem = default_semantic_table();
    let spec = default_fsm_spec();

    let sentences = read_vertical_tagged(text).unwrap();
    let mut produced: Vec<String> = Vec::new();
    for sent in &sentences {
        let seq = single_token_chunks(sent);
        let (chunks, _) = assign_heads_sequence(&seq.chunks, &syn, &sem);
        let nps = extract_noun_phrases(&chunks, &spec);
        assert!(
            npchunk::fsm::verify_longest_match(&chunks, &spec, &nps),
            "longest-match dominance must hold on every sentence"
        );
        for np in nps {
            let group: Vec<String> = sent.tokens[np.start..np.end]
                .iter()
                .map(|t| format!("{}_{}", t.surface, t.lob_tag))
                .collect();
            produced.push(group.join(" "));
        }
    }

    // determinism across threads
    let from_threads: Vec<Vec<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4)
            .map(|_| {
                scope.spawn(|| {
                    let syn = default_syntactic_table();
                    let sem = default_semantic_table();
                    let spec = default_fsm_spec();
                    let mut all = Vec::new();
                    for sent in &sentences {
                        let seq = single_token_chunks(sent);
                        let (chunks, _) = assign_heads_sequence(&seq.chunks, &syn, &sem);
                        for np in extract_noun_phrases(&chunks, &spec) {
                            all.push(np.text);
                        }
                    }
                    all
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for t in &from_threads[1..] {
        assert_eq!(t, &from_threads[0], "extraction must be thread-deterministic");
    }
    assert_eq!(
        produced.len(),
        golden.len(),
        "group count: produced {:#?}",
        produced
    );
    for (i, (got, want)) in produced.iter().zip(&golden).enumerate() {
        assert_eq!(got, want, "group {i} differs");
    }

    // (18): the "of" connection
    let books = read_vertical_tagged("the_ATI books_NNS of_IO my_PP$ uncle_NN")
        .unwrap()
        .remove(0);
    let (chunks, _) = assign_heads_sequence(&single_token_chunks(&books).chunks, &syn, &sem);
    let nps = extract_noun_phrases(&chunks, &spec);
    assert_eq!(nps.len(), 1);
    assert_eq!(nps[0].text, "the books of my uncle");

    pass("5 appendix-golden", format!("{} bracket groups reproduced", golden.len()));
}

/// Criterion 6: metric arithmetic at desk scale from the published totals.
#[test]
fn criterion_6_metric_arithmetic() {
    // Totals: ENP=30760, CNP=29120, ANP=30143.
    let table = ContingencyTable { a: 29120, b: 30760 - 29120, c: 30143 - 29120 };
    let (p, r) = precision_recall(&table);
    let precision = p.unwrap() / 100.0;
    assert_eq!(round2(precision), 0.95, "precision from totals");
    // The published average recall is the mean of the per-category recalls
    // (the table's Av. row); the micro ratio is 0.9661.
    let micro_recall = r.unwrap() / 100.0;
    assert!((micro_recall - 0.9661).abs() < 0.0005);
    let categories: [(f64, f64); 4] =
        [(7660.0, 7873.0), (6943.0, 7199.0), (5958.0, 6278.0), (8559.0, 8793.0)];
    let macro_recall: f64 =
        categories.iter().map(|(cnp, anp)| cnp / anp).sum::<f64>() / categories.len() as f64;
    assert_eq!(round2(macro_recall), 0.96, "average recall over categories");
    pass(
        "6 metric-arithmetic",
        format!(
            "precision {:.2}, average recall {:.2} (micro {:.4})",
            round2(precision),
            round2(macro_recall),
            micro_recall
        ),
    );
}

/// (17) as SUSANNE records: [[[a black badge] of [frayed respectability]]
/// that ought never to have left [his neck]].
const BADGE_SUSANNE: &str = "\
X01:0010a - AT1 a a [O[S[Np:x[Np:y[Np.
X01:0010b - JJ black black .
X01:0010c - NN1c badge badge .Np]
X01:0010d - IO of of [Po.
X01:0010e - JJ frayed frayed [Np.
X01:0010f - NN1u respectability respectability .Np]Po]Np:y]
X01:0010g - CST that that [Fr.
X01:0010h - VM ought ought .
X01:0010i - XX never never .
X01:0010j - TO to to [Ti.
X01:0010k - VH0 have have .
X01:0010l - VVNv left leave .
X01:0010m - APPGE his his [Np.
X01:0010n - NN1c neck neck .Np]Ti]Fr]Np:x]S]O]
";

/// Criterion 7: taxonomy golden on (17).
#[test]
fn criterion_7_taxonomy_golden() {
    let tag_map = default_tag_map();
    let groups = parse_susanne_stream(BADGE_SUSANNE).unwrap();
    assert_eq!(groups.len(), 1);
    let tree = npchunk::corpus::build_parse_tree(&groups[0]).unwrap();
    let sentence = records_to_sentence(&groups[0], &tag_map).unwrap();
    let counts = np_taxonomy_counts(&tree, &sentence.tokens, &NpPredicate::default());
    assert_eq!(counts.np, 5, "ordinary NPs");
    assert_eq!(counts.mnp, 1, "maximal NPs");
    assert_eq!(counts.mnp_min, 3, "minimal NPs");
    assert_eq!(counts.mmnp, 0, "maximal-and-minimal NPs");

    // classification side: "his neck" is minimal but not maximal
    let (chunks, _) = assign_heads_sequence(
        &single_token_chunks(&sentence).chunks,
        &default_syntactic_table(),
        &default_semantic_table(),
    );
    let nps = extract_noun_phrases(&chunks, &default_fsm_spec());
    let (cls, _) = classify_extracted_nps(&nps, &tree, &sentence.tokens, &NpPredicate::default());
    assert!(cls.cmnp_min >= 1);
    pass("7 taxonomy-golden", format!("np=5 mnp=1 mnp_min=3 mmnp=0 anp={}", counts.anp));
}

fn random_tree(rng: &mut ChaCha8Rng, alphabet: &[&str]) -> (ParseNode, Vec<Token>) {
    let n = rng.gen_range(2..=12);
    let tokens: Vec<Token> = (0..n)
        .map(|i| Token::new(format!("w{i}"), alphabet[rng.gen_range(0..alphabet.len())]))
        .collect();

    fn build(rng: &mut ChaCha8Rng, start: usize, end: usize, depth: usize) -> Vec<ParseChild> {
        let mut children = Vec::new();
        let mut at = start;
        while at < end {
            let len = rng.gen_range(1..=(end - at).min(4));
            if len > 1 && depth < 3 && rng.gen_bool(0.7) {
                let labels = ["Np", "Vab", "Po", "Jp", "S"];
                let label = labels[rng.gen_range(0..labels.len())];
                let inner = build(rng, at, at + len, depth + 1);
                children.push(ParseChild::Node(ParseNode::new(label, at, at + len, inner)));
            } else {
                for i in at..at + len {
                    children.push(ParseChild::Leaf(i));
                }
            }
            at += len;
        }
        children
    }

    let children = build(rng, 0, n, 0);
    let root = ParseNode::new("", 0, n, children);
    root.validate().unwrap();
    (root, tokens)
}

/// Criterion 8: fitted models are normalized on 100 random toy treebanks.
#[test]
fn criterion_8_grammar_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let alphabet = ["AT", "NN", "VBD", "JJ", "IN", "."];
    for bank in 0..100 {
        let mut counts = TrainingCounts::new();
        let sentences = rng.gen_range(1..6);
        for _ in 0..sentences {
            let (tree, tokens) = random_tree(&mut rng, &alphabet);
            counts.observe_sentence(&tree, &tokens, 6).unwrap();
        }
        let model = counts.fit().unwrap();

        let sum: f64 = model.unigram_rules().map(|(l, _)| model.p_unigram(l)).sum();
        assert!((sum - 1.0).abs() <= 1e-9, "bank {bank}: unigram sum {sum}");

        let mut by_ctx: BTreeMap<&Context, f64> = BTreeMap::new();
        for (ctx, label, _) in model.bigram_rules() {
            *by_ctx.entry(ctx).or_insert(0.0) += model.p_bigram(ctx, label);
        }
        for (ctx, sum) in by_ctx {
            assert!(
                (sum - 1.0).abs() <= 1e-9,
                "bank {bank}: context {} sums to {sum}",
                ctx.as_str()
            );
        }
    }
    pass("8 grammar-normalization", "100 random treebanks, sums within 1e-9".to_string());
}

/// Criterion 9: throughput on a synthetic corpus: chunk + head + extract at
/// 10,000 words/s or better, single-threaded.
#[test]
fn criterion_9_throughput() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEED);
    let alphabet: Vec<String> = ["AT", "ATI", "JJ", "NN", "NNS", "VB", "VBD", "IN", "CS", "RB",
        "MD", "BE", "HV", "CD", "OD", "NR", "PP3", "PP$", "CC", "TO", "QL", "AP", "DT", "EX",
        "JJR", "NPT", "NPL", "VBN", "VBG", "."]
        .iter()
        .map(|s| s.to_string())
        .collect();

    // a 1000-rule model
    let mut instances = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < 1000 {
        let len = rng.gen_range(1..=4);
        let tags: Vec<&str> =
            (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].as_str()).collect();
        let label = ChunkLabel::from_tags(&tags);
        if seen.insert(label.clone()) {
            for _ in 0..rng.gen_range(1..4) {
                instances.push(label.clone());
            }
        }
    }
    let rules: Vec<ChunkLabel> = seen.iter().cloned().collect();
    let mut pairs = Vec::new();
    for _ in 0..3000 {
        let l = rules[rng.gen_range(0..rules.len())].clone();
        let r = rules[rng.gen_range(0..rules.len())].clone();
        pairs.push((Context::Chunk(l), r));
    }
    for _ in 0..200 {
        pairs.push((Context::Begin, rules[rng.gen_range(0..rules.len())].clone()));
    }
    let model = GrammarModel::fit_from_instances(&instances, &pairs).unwrap();
    let scorer = Scorer::new(&model);

    // a 100k-word corpus of ~20-word sentences built from rule tag sequences
    let total_words = 100_000usize;
    let mut sentences = Vec::new();
    let mut words = 0usize;
    while words < total_words {
        let mut tags: Vec<String> = Vec::new();
        while tags.len() < 20 {
            let rule = &rules[rng.gen_range(0..rules.len())];
            tags.extend(rule.as_str().split(' ').map(|s| s.to_string()));
        }
        words += tags.len();
        let refs: Vec<&str> = tags.iter().map(|s| s.as_str()).collect();
        sentences.push(sentence_from(&refs));
    }

    let syn = default_syntactic_table();
    let sem = default_semantic_table();
    let fsm = default_fsm_spec();

    let started = Instant::now();
    let mut nps = 0usize;
    let mut chunks = 0usize;
    for sent in &sentences {
        let seq = chunk_sentence(sent, &scorer, None).unwrap();
        chunks += seq.chunks.len();
        let (headed, _) = assign_heads_sequence(&seq.chunks, &syn, &sem);
        nps += extract_noun_phrases(&headed, &fsm).len();
    }
    let elapsed = started.elapsed().as_secs_f64();
    let wps = words as f64 / elapsed;
    assert!(
        wps >= 10_000.0,
        "throughput {wps:.0} words/s below 10,000 ({words} words in {elapsed:.2}s)"
    );
    pass(
        "9 throughput",
        format!(
            "{wps:.0} words/s over {words} words ({chunks} chunks, {nps} NPs); \
             reference figure from 1994 hardware: 0.00291 s/word"
        ),
    );
}

/// Criterion 10 (optional, corpus-gated): full-corpus statistics. Runs only
/// when SUSANNE_DIR points at a licensed corpus; reports deltas rather than
/// hard-failing on the reconstruction-sensitive counts.
#[test]
fn criterion_10_susanne_corpus_gated() {
    let Some(dir) = std::env::var_os("SUSANNE_DIR") else {
        pass("10 susanne-corpus", "SKIPPED: SUSANNE_DIR not set (licensed corpus absent)".into());
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .expect("SUSANNE_DIR readable")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    assert_eq!(files.len(), 64, "expected 64 SUSANNE files");

    let tag_map = default_tag_map();
    let mut all_groups = Vec::new();
    let mut words = 0usize;
    let mut unknown_tags: BTreeMap<String, usize> = BTreeMap::new();
    for path in &files {
        let text = std::fs::read_to_string(path).unwrap();
        let groups = parse_susanne_stream(&text).unwrap();
        for g in &groups {
            words += g.len();
            for r in g {
                if tag_map.map_tag(&r.word_tag).is_err() {
                    *unknown_tags.entry(r.word_tag.clone()).or_insert(0) += 1;
                }
            }
        }
        all_groups.extend(groups);
    }
    println!("susanne: {} sentences (published: 6920), {} words (published: 150053)", all_groups.len(), words);
    println!("susanne: {} distinct unmapped tags", unknown_tags.len());
    assert_eq!(words, 150053, "word count should match the published total");

    let tag_map = default_tag_map();
    let model = train_model(&all_groups, &tag_map, None).unwrap();
    println!(
        "susanne: {} chunk rules (published: 10937), {} context rules (published: 37198); \
         deltas are reported, not asserted (selection rule is a reconstruction)",
        model.rule_count(),
        model.context_rule_count()
    );

    let scorer = Scorer::new(&model);
    let syn = default_syntactic_table();
    let sem = default_semantic_table();
    let fsm = default_fsm_spec();
    let stages =
        Stages { scorer: Some(&scorer), cap: None, syntactic: &syn, semantic: &sem, fsm: &fsm };
    let report = evaluate_groups(
        &all_groups,
        &tag_map,
        &stages,
        &NpPredicate::with_np_prefixes(vec!["N".into()]),
    )
    .unwrap();
    let t = &report.total.taxonomy;
    println!(
        "susanne taxonomy: NP={} (37831) MNP={} (23528) mNP={} (25754) MmNP={} (14667) ANP={} (30143)",
        t.np, t.mnp, t.mnp_min, t.mmnp, t.anp
    );
    pass("10 susanne-corpus", format!("{} sentences processed", all_groups.len()));
}
