//! Randomized invariant checks: the matcher against a naive scan oracle,
//! the n-gram scorer against a brute-force oracle, and structural
//! invariants of the indicator and data-prep layers.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use proswitch::data::{QARecord, QuestionType, SourceKind};
use proswitch::lexicon::{build_lexicon, LexiconFormat, TermLexicon};
use proswitch::prompts::{InstructionLevel, Templates};
use proswitch::quality::{bert_score, bleu, TrigramHashProvider};
use proswitch::style::{
    classify_professionalism, compute_gaps, parse_step_count, pro_f1, Combiner, EvalConfig,
    EvalRecord, ParseMode, StyleLabel,
};

fn term_set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[a-z]{1,6}( [a-z]{1,3})?", 1..8)
}

/// A text stitched from lexicon terms, noise words and punctuation, with
/// random casing and separators (including none, to create embeddings).
fn lexicon_and_text() -> impl Strategy<Value = (BTreeSet<String>, String)> {
    term_set().prop_flat_map(|terms| {
        let term_vec: Vec<String> = terms.iter().cloned().collect();
        let piece = prop_oneof![
            3 => prop::sample::select(term_vec),
            2 => "[a-zA-Z]{1,7}",
            1 => prop::sample::select(vec![
                ",".to_string(),
                ".".to_string(),
                "(".to_string(),
                ")".to_string(),
                ";".to_string(),
            ]),
        ];
        let sep = prop::sample::select(vec![
            String::new(),
            " ".to_string(),
            " ".to_string(),
            ", ".to_string(),
            ". ".to_string(),
        ]);
        (
            Just(terms),
            prop::collection::vec((piece, sep, any::<bool>()), 0..20),
        )
            .prop_map(|(terms, pieces)| {
                let mut text = String::new();
                for (piece, sep, upper) in pieces {
                    if upper {
                        text.push_str(&piece.to_uppercase());
                    } else {
                        text.push_str(&piece);
                    }
                    text.push_str(&sep);
                }
                (terms, text)
            })
    })
}

fn lexicon_from(terms: &BTreeSet<String>) -> TermLexicon {
    TermLexicon::from_terms("prop", terms.iter().cloned(), String::new()).unwrap()
}

proptest! {
    #[test]
    fn matcher_equals_naive_scan_oracle((terms, text) in lexicon_and_text()) {
        let lexicon = lexicon_from(&terms);
        let term_vec: Vec<String> = terms.iter().cloned().collect();
        let got = lexicon.match_terms(&text).hits;
        let want = common::oracle_match(&term_vec, &text);
        prop_assert_eq!(&got, &want);

        // Reported hits never overlap and come sorted by offset.
        let mut prev_end = 0usize;
        for (term, start) in &got {
            prop_assert!(*start >= prev_end);
            prev_end = start + term.len();
        }
    }

    #[test]
    fn hit_count_is_case_insensitive((terms, text) in lexicon_and_text()) {
        let lexicon = lexicon_from(&terms);
        prop_assert_eq!(
            lexicon.match_terms(&text).hit_count,
            lexicon.match_terms(&text.to_uppercase()).hit_count
        );
    }

    #[test]
    fn joining_a_word_char_to_a_hit_removes_it(
        (terms, text) in lexicon_and_text(),
        pick in any::<prop::sample::Index>(),
    ) {
        let lexicon = lexicon_from(&terms);
        let hits = lexicon.match_terms(&text).hits;
        prop_assume!(!hits.is_empty());
        let (term, start) = pick.get(&hits).clone();
        let end = start + term.len();

        // Insert an alphanumeric char right after the span (ASCII text,
        // so offsets carry over to the modified string).
        let mut modified = String::with_capacity(text.len() + 1);
        modified.push_str(&text[..end]);
        modified.push('x');
        modified.push_str(&text[end..]);
        let modified_hits = lexicon.match_terms(&modified).hits;
        prop_assert!(!modified_hits.contains(&(term, start)));
    }

    #[test]
    fn bleu_stays_in_unit_range_and_matches_oracle(
        cand in "[a-d ,.]{0,40}",
        refs in prop::collection::vec("[a-d ,.]{1,40}", 1..4),
        m in 1usize..=4,
    ) {
        let ref_slices: Vec<&str> = refs.iter().map(String::as_str).collect();
        let got = bleu(&cand, &ref_slices, m).unwrap();
        prop_assert!((0.0..=1.0).contains(&got));
        let want = common::oracle_bleu(&cand, &ref_slices, m);
        prop_assert!((got - want).abs() <= 1e-12, "impl {got} vs oracle {want}");
    }

    #[test]
    fn bleu_identity_is_one(tokens in prop::collection::vec("[a-z]{1,5}", 3..15), m in 1usize..=3) {
        let text = tokens.join(" ");
        let got = bleu(&text, &[text.as_str()], m).unwrap();
        prop_assert_eq!(got, 1.0);
    }

    #[test]
    fn bleu_is_reference_order_invariant(
        cand in "[a-d ]{1,30}",
        mut refs in prop::collection::vec("[a-d ]{1,30}", 2..4),
        m in 1usize..=3,
    ) {
        let forward: Vec<&str> = refs.iter().map(String::as_str).collect();
        let a = bleu(&cand, &forward, m).unwrap();
        refs.reverse();
        let backward: Vec<&str> = refs.iter().map(String::as_str).collect();
        let b = bleu(&cand, &backward, m).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bert_swap_exchanges_precision_and_recall(
        a in "[a-h]{1,8}( [a-h]{1,8}){0,6}",
        b in "[a-h]{1,8}( [a-h]{1,8}){0,6}",
    ) {
        let provider = TrigramHashProvider::default();
        let ab = bert_score(&a, &b, &provider).unwrap();
        let ba = bert_score(&b, &a, &provider).unwrap();
        prop_assert!((ab.precision - ba.recall).abs() <= 1e-12);
        prop_assert!((ab.recall - ba.precision).abs() <= 1e-12);
        prop_assert!((ab.f - ba.f).abs() <= 1e-12);
    }

    #[test]
    fn bert_identity_is_exactly_one(a in "[a-h]{1,8}( [a-h]{1,8}){0,6}") {
        let provider = TrigramHashProvider::default();
        let scores = bert_score(&a, &a, &provider).unwrap();
        prop_assert_eq!(scores.precision, 1.0);
        prop_assert_eq!(scores.recall, 1.0);
        prop_assert_eq!(scores.f, 1.0);
    }

    #[test]
    fn gap_magnitudes_ignore_which_group_is_which(
        pro in prop::collection::vec((0u32..10, 0u32..12, 1u32..300), 1..6),
        nonpro in prop::collection::vec((0u32..10, 0u32..12, 1u32..300), 1..6),
    ) {
        let build = |rows: &[(u32, u32, u32)], style: StyleLabel, flip: bool| -> Vec<EvalRecord> {
            rows.iter()
                .enumerate()
                .map(|(i, &(hits, steps, len))| EvalRecord {
                    question_id: format!("q{i}"),
                    requested_style: if flip { style.opposite() } else { style },
                    generated_text: String::new(),
                    term_hits: hits,
                    reasoning_steps: Some(steps),
                    text_length: len,
                    run_index: 1,
                })
                .collect()
        };
        let mut straight = build(&pro, StyleLabel::Professional, false);
        straight.extend(build(&nonpro, StyleLabel::NonProfessional, false));
        let mut flipped = build(&pro, StyleLabel::Professional, true);
        flipped.extend(build(&nonpro, StyleLabel::NonProfessional, true));

        let (thg_a, rsg_a) = compute_gaps(&straight).unwrap();
        let (thg_b, rsg_b) = compute_gaps(&flipped).unwrap();
        prop_assert!((thg_a - thg_b).abs() <= 1e-12);
        prop_assert!((rsg_a - rsg_b).abs() <= 1e-12);
        prop_assert!(thg_a >= 0.0 && rsg_a >= 0.0);
    }

    #[test]
    fn classification_is_monotone_in_both_indicators(
        th in 0u32..8,
        rs in 0u32..10,
        extra_th in 0u32..4,
        extra_rs in 0u32..4,
        or_mode in any::<bool>(),
    ) {
        let config = EvalConfig {
            combiner: if or_mode { Combiner::Or } else { Combiner::And },
            ..EvalConfig::default()
        };
        if classify_professionalism(th, rs, &config) == StyleLabel::Professional {
            prop_assert_eq!(
                classify_professionalism(th + extra_th, rs + extra_rs, &config),
                StyleLabel::Professional
            );
        }
    }

    #[test]
    fn pro_f1_stays_in_unit_range(
        rows in prop::collection::vec((any::<bool>(), any::<bool>()), 1..40),
    ) {
        let to_label = |b: bool| if b { StyleLabel::Professional } else { StyleLabel::NonProfessional };
        let predictions: Vec<StyleLabel> = rows.iter().map(|&(p, _)| to_label(p)).collect();
        let gold: Vec<StyleLabel> = rows.iter().map(|&(_, g)| to_label(g)).collect();
        let f1 = pro_f1(&predictions, &gold).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
    }

    #[test]
    fn step_marker_roundtrips_through_with_marker(
        lines in prop::collection::vec("[a-z ]{1,20}", 1..9),
    ) {
        // Enumerated decomposition without a marker parses by counting,
        // and with_marker() makes the count explicit and re-parseable.
        let enumerated: Vec<String> = lines
            .iter()
            .enumerate()
            .map(|(i, body)| format!("{}. {body}", i + 1))
            .collect();
        let trace = parse_step_count(&enumerated.join("\n")).unwrap();
        prop_assert_eq!(trace.step_count, lines.len() as u32);
        prop_assert_eq!(trace.parse_mode, ParseMode::FallbackEnumeration);

        let reparsed = parse_step_count(&trace.with_marker()).unwrap();
        prop_assert_eq!(reparsed.step_count, trace.step_count);
        prop_assert_eq!(reparsed.parse_mode, ParseMode::Marker);
    }

    #[test]
    fn marker_parse_reads_back_planted_counts(
        prefix in "[a-zA-Z ,.]{0,60}",
        n in 0u32..500,
    ) {
        let reply = format!("{prefix}\nTotal steps: {n}");
        let trace = parse_step_count(&reply).unwrap();
        prop_assert_eq!(trace.step_count, n);
    }

    #[test]
    fn type_label_normalization_never_invents_types(reply in ".{0,30}") {
        if let Some(qtype) = QuestionType::normalize(&reply) {
            prop_assert!(QuestionType::ALL.contains(&qtype));
        }
        for qtype in QuestionType::ALL {
            let decorated = format!("Output: {}.", qtype.as_label());
            prop_assert_eq!(QuestionType::normalize(&decorated), Some(qtype));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // File-backed cases run fewer iterations.
    #[test]
    fn mesh_lexicon_build_is_deterministic_and_matches_line_oracle(
        raw_terms in prop::collection::vec("[a-zA-Z]{1,8}( [a-zA-Z]{1,5})?", 1..10),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.xml");
        let mut xml = String::from("<MeSH>\n");
        for t in &raw_terms {
            xml.push_str("<DescriptorRecord>\n");
            xml.push_str(&format!("<QualifierName>{t}</QualifierName>\n"));
            xml.push_str("</DescriptorRecord>\n");
        }
        xml.push_str("</MeSH>\n");
        std::fs::write(&path, &xml).unwrap();

        let a = build_lexicon(&path, LexiconFormat::MeshXml, "mesh").unwrap();
        let b = build_lexicon(&path, LexiconFormat::MeshXml, "mesh").unwrap();
        prop_assert_eq!(a.terms().collect::<Vec<_>>(), b.terms().collect::<Vec<_>>());
        prop_assert_eq!(a.source_digest(), b.source_digest());

        let want: BTreeSet<String> = common::oracle_qualifier_texts(&xml)
            .iter()
            .map(|t| t.to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        let got: BTreeSet<String> = a.terms().map(str::to_string).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn training_set_emission_is_deterministic(
        ids in prop::collection::btree_set("[a-z0-9]{1,6}", 1..10),
        styles in prop::collection::vec(any::<bool>(), 10),
        types in prop::collection::vec(0usize..4, 10),
    ) {
        let records: Vec<QARecord> = ids
            .iter()
            .zip(styles.iter().zip(types.iter()))
            .map(|(id, (&pro, &t))| QARecord {
                id: id.clone(),
                question: format!("Question {id}?"),
                answer: format!("Answer {id}."),
                style: if pro { StyleLabel::Professional } else { StyleLabel::NonProfessional },
                qtype: Some(QuestionType::ALL[t]),
                source: SourceKind::Synthetic,
                snippet: None,
            })
            .collect();

        let templates = Templates::builtin();
        let a = proswitch::data::build_training_set(&records, InstructionLevel::Basic, &templates).unwrap();
        let b = proswitch::data::build_training_set(&records, InstructionLevel::Basic, &templates).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

        // Sorted by source record id.
        let emitted_ids: Vec<&str> = a.iter().map(|e| e.meta.source_id.as_str()).collect();
        let mut sorted = emitted_ids.clone();
        sorted.sort_unstable();
        prop_assert_eq!(emitted_ids, sorted);
    }
}
