use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use websem_core::corpus::{Corpus, Document, Split};
use websem_core::text::{
    char_ngrams, cooccurrence_counts, embed_document, load_embedder, read_embedder,
    save_embedder, train_doc2vec, train_fasttext, train_glove, train_lda, train_text,
    train_word2vec, write_embedder, Aggregation, EmbeddingConfig, Method,
};
use websem_core::corpus::build_vocabulary;
use websem_core::Error;

fn corpus_from(captions: &[String], split: Split) -> Vec<Document> {
    captions
        .iter()
        .enumerate()
        .map(|(i, c)| Document {
            id: format!("{split:?}{i}"),
            caption: c.clone(),
            tags: Default::default(),
            features: None,
            labels: None,
            split,
        })
        .collect()
}

fn train_corpus(captions: &[String]) -> Corpus {
    Corpus::new(corpus_from(captions, Split::Train)).unwrap()
}

/// Documents drawn from one of two disjoint 20-word vocabularies.
fn two_clusters(n_docs: usize, seed: u64) -> (Vec<String>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut caps = Vec::new();
    let mut which = Vec::new();
    for _ in 0..n_docs {
        let c = rng.random_range(0..2);
        let prefix = if c == 0 { "a" } else { "b" };
        let words: Vec<String> = (0..10)
            .map(|_| format!("{prefix}{}", rng.random_range(0..20)))
            .collect();
        caps.push(words.join(" "));
        which.push(c);
    }
    (caps, which)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn small(method: Method, dim: usize, seed: u64) -> EmbeddingConfig {
    EmbeddingConfig {
        seed,
        ..EmbeddingConfig::new(method, dim)
    }
}

#[test]
fn every_method_emits_configured_dimension() {
    let (caps, _) = two_clusters(60, 1);
    let corpus = train_corpus(&caps);
    for method in Method::ALL {
        let cfg = EmbeddingConfig {
            epochs: Some(2),
            ..small(method, 7, 3)
        };
        let e = train_text(&corpus, &cfg).unwrap().embedder;
        assert_eq!(e.method(), method);
        assert_eq!(e.dim(), 7);
        for t in e.vocab().tokens() {
            assert_eq!(e.word_vector(t).unwrap().len(), 7, "{method} {t}");
        }
        for agg in [Aggregation::Mean, Aggregation::Tfidf] {
            let stats = websem_core::corpus::compute_tfidf_stats(&corpus, e.vocab());
            let v = embed_document(&e, &["a1", "a2", "b3"], agg, Some(&stats)).unwrap();
            assert_eq!(v.len(), 7);
        }
    }
}

#[test]
fn default_word2vec_has_400_components() {
    let (caps, _) = two_clusters(10, 2);
    let cfg = EmbeddingConfig {
        epochs: Some(1),
        ..EmbeddingConfig::default()
    };
    let e = train_word2vec(&train_corpus(&caps), &cfg).unwrap().embedder;
    assert!(e.vocab().tokens().iter().all(|t| e.word_vector(t).unwrap().len() == 400));
}

#[test]
fn word2vec_zero_epochs_keeps_initialization() {
    let (caps, _) = two_clusters(20, 4);
    let cfg = EmbeddingConfig {
        epochs: Some(0),
        ..small(Method::Word2vec, 5, 77)
    };
    let e = train_word2vec(&train_corpus(&caps), &cfg).unwrap().embedder;
    // Documented init: rows drawn in id order, uniform in (-0.5/d, 0.5/d).
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for t in e.vocab().tokens() {
        let expected: Vec<f64> = (0..5)
            .map(|_| ((rng.random::<f32>() - 0.5) * (1.0 / 5.0)) as f64)
            .collect();
        assert_eq!(e.word_vector(t).unwrap(), expected);
    }
}

#[test]
fn single_worker_training_is_bit_reproducible() {
    let (caps, _) = two_clusters(80, 5);
    let corpus = train_corpus(&caps);
    for method in Method::ALL {
        let cfg = EmbeddingConfig {
            epochs: Some(3),
            ..small(method, 6, 9)
        };
        let a = write_embedder(&train_text(&corpus, &cfg).unwrap().embedder);
        let b = write_embedder(&train_text(&corpus, &cfg).unwrap().embedder);
        assert_eq!(a, b, "{method}");
    }
}

#[test]
fn multi_worker_training_produces_valid_vectors() {
    let (caps, _) = two_clusters(200, 6);
    let corpus = train_corpus(&caps);
    for method in [Method::Word2vec, Method::Fasttext, Method::Doc2vec] {
        let cfg = EmbeddingConfig {
            workers: 4,
            ..small(method, 8, 1)
        };
        let e = train_text(&corpus, &cfg).unwrap().embedder;
        for t in e.vocab().tokens() {
            let v = e.word_vector(t).unwrap();
            assert_eq!(v.len(), 8);
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
}

#[test]
fn word2vec_pairs_that_always_cooccur_end_up_close() {
    let mut wins = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let caps: Vec<String> = (0..300)
            .map(|_| {
                // Six topics of ten filler words; u and v share every topic-0
                // document, at most three positions apart.
                let topic = rng.random_range(0..6);
                let mut words: Vec<String> = (0..10)
                    .map(|_| format!("f{}", topic * 10 + rng.random_range(0..10)))
                    .collect();
                if topic == 0 {
                    let at = rng.random_range(0..words.len());
                    words.insert(at, "u".into());
                    let j = rng.random_range(at + 1..=(at + 3).min(words.len()));
                    words.insert(j, "v".into());
                }
                words.join(" ")
            })
            .collect();
        let cfg = EmbeddingConfig {
            epochs: Some(5),
            ..small(Method::Word2vec, 16, seed)
        };
        let e = train_word2vec(&train_corpus(&caps), &cfg).unwrap().embedder;
        let u = e.word_vector("u").unwrap();
        let uv = cosine(&u, &e.word_vector("v").unwrap());
        let mut others: Vec<f64> = (0..60)
            .filter_map(|i| e.word_vector(&format!("f{i}")))
            .map(|w| cosine(&u, &w))
            .collect();
        others.sort_by(f64::total_cmp);
        let median = others[others.len() / 2];
        if uv > median {
            wins += 1;
        }
    }
    assert!(wins >= 19, "only {wins}/20 seeds");
}

#[test]
fn glove_cooccurrence_of_two_tokens() {
    let corpus = train_corpus(&["a b".to_string()]);
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let m = cooccurrence_counts(&corpus, &vocab, 1);
    let (a, b) = (vocab.id("a").unwrap(), vocab.id("b").unwrap());
    assert_eq!(m.get(a, b), 1.0);
    assert_eq!(m.get(b, a), 1.0);
    assert_eq!(m.get(a, a), 0.0);
    assert_eq!(m.get(b, b), 0.0);
}

#[test]
fn glove_objective_decreases_and_separates_clusters() {
    let (caps, _) = two_clusters(300, 7);
    let cfg = EmbeddingConfig {
        epochs: Some(30),
        window: 5,
        ..small(Method::Glove, 12, 2)
    };
    let out = train_glove(&train_corpus(&caps), &cfg).unwrap();
    let losses = &out.epoch_losses;
    assert_eq!(losses.len(), 30);
    let pairs = losses.windows(2).count();
    let down = losses.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(down as f64 >= 0.9 * pairs as f64, "{losses:?}");

    let e = out.embedder;
    let vec_of = |p: &str, i: usize| e.word_vector(&format!("{p}{i}")).unwrap();
    let (mut within, mut between) = (Vec::new(), Vec::new());
    for i in 0..20 {
        for j in 0..20 {
            if i != j {
                within.push(cosine(&vec_of("a", i), &vec_of("a", j)));
                within.push(cosine(&vec_of("b", i), &vec_of("b", j)));
            }
            between.push(cosine(&vec_of("a", i), &vec_of("b", j)));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&within) > mean(&between), "{} vs {}", mean(&within), mean(&between));
}

#[test]
fn fasttext_composes_oov_from_ngrams() {
    let caps = vec!["ababba cat dog".to_string(); 10];
    let cfg = EmbeddingConfig {
        min_n: 3,
        max_n: 3,
        epochs: Some(2),
        ..small(Method::Fasttext, 6, 0)
    };
    let e = train_fasttext(&train_corpus(&caps), &cfg).unwrap().embedder;

    // "abbaba" is out of vocabulary but has exactly the trigrams of "ababba".
    assert!(e.vocab().id("abbaba").is_none());
    assert_eq!(e.word_vector("abbaba").unwrap(), e.word_vector("ababba").unwrap());

    // embed("cat") is the sum over {<ca, cat, at>}.
    assert_eq!(char_ngrams("cat", 3, 3), ["<ca", "cat", "at>"]);
    let mut sum = vec![0.0; 6];
    for g in ["<ca", "cat", "at>"] {
        for (s, x) in sum.iter_mut().zip(e.ngram_vector(g).unwrap()) {
            *s += x;
        }
    }
    assert_eq!(e.word_vector("cat").unwrap(), sum);

    // Partially known OOV word: only its known n-grams contribute.
    let v = e.word_vector("cab").unwrap();
    let expected = e.ngram_vector("<ca").unwrap();
    assert_eq!(v, expected);
    assert_eq!(v.len(), 6);
    assert!(e.word_vector("zzz").is_none());
}

#[test]
fn lda_word_vectors_are_distributions() {
    let (caps, _) = two_clusters(40, 8);
    let corpus = train_corpus(&caps);
    let cfg = EmbeddingConfig {
        epochs: Some(20),
        ..small(Method::Lda, 5, 1)
    };
    let e = train_lda(&corpus, &cfg).unwrap().embedder;
    for t in e.vocab().tokens() {
        let v = e.word_vector(t).unwrap();
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    let doc = embed_document(&e, &["a1", "a2", "b7"], Aggregation::Mean, None).unwrap();
    assert!((doc.iter().sum::<f64>() - 1.0).abs() < 1e-6);
}

#[test]
fn lda_single_topic_is_degenerate() {
    let (caps, _) = two_clusters(10, 9);
    let cfg = EmbeddingConfig {
        epochs: Some(5),
        ..small(Method::Lda, 1, 0)
    };
    let e = train_lda(&train_corpus(&caps), &cfg).unwrap().embedder;
    for t in e.vocab().tokens() {
        assert_eq!(e.word_vector(t).unwrap(), [1.0]);
    }
    assert_eq!(
        embed_document(&e, &["a1", "b1", "a3"], Aggregation::Mean, None).unwrap(),
        [1.0]
    );
}

#[test]
fn lda_warns_when_topics_outnumber_documents() {
    let (caps, _) = two_clusters(3, 10);
    let cfg = EmbeddingConfig {
        epochs: Some(2),
        ..small(Method::Lda, 8, 0)
    };
    let out = train_lda(&train_corpus(&caps), &cfg).unwrap();
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn lda_recovers_disjoint_concepts() {
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0
    };
    let mut good = 0;
    for seed in 0..10u64 {
        let (caps, _) = two_clusters(200, 100 + seed);
        let cfg = EmbeddingConfig {
            epochs: Some(100),
            alpha: Some(0.1),
            ..small(Method::Lda, 2, seed)
        };
        let e = train_lda(&train_corpus(&caps), &cfg).unwrap().embedder;
        let topic = |p: &str| -> Vec<usize> {
            (0..20)
                .map(|i| argmax(&e.word_vector(&format!("{p}{i}")).unwrap()))
                .collect()
        };
        let (ta, tb) = (topic("a"), topic("b"));
        let coherent = ta.iter().all(|&t| t == ta[0]) && tb.iter().all(|&t| t == tb[0]);
        if coherent && ta[0] != tb[0] {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10 seeds recovered the split");
}

#[test]
fn doc2vec_inference_is_deterministic_and_clusters() {
    let (caps, which) = two_clusters(400, 11);
    let cfg = EmbeddingConfig {
        epochs: Some(20),
        ..small(Method::Doc2vec, 16, 3)
    };
    let e = train_doc2vec(&train_corpus(&caps), &cfg).unwrap().embedder;
    let toks = ["a1", "a5", "a9"];
    let v1 = embed_document(&e, &toks, Aggregation::Mean, None).unwrap();
    let v2 = embed_document(&e, &toks, Aggregation::Tfidf, None).unwrap();
    assert_eq!(v1, v2);
    assert_eq!(v1.len(), 16);

    let embed = |c: &str| {
        let t: Vec<&str> = c.split(' ').collect();
        embed_document(&e, &t, Aggregation::Mean, None).unwrap()
    };
    let mut centroids = [vec![0.0; 16], vec![0.0; 16]];
    for (c, &k) in caps.iter().zip(&which) {
        for (a, x) in centroids[k].iter_mut().zip(embed(c)) {
            *a += x;
        }
    }
    let (held, held_which) = two_clusters(100, 999);
    let correct = held
        .iter()
        .zip(&held_which)
        .filter(|(c, &k)| {
            let v = embed(c);
            cosine(&v, &centroids[k]) > cosine(&v, &centroids[1 - k])
        })
        .count();
    assert!(correct >= 80, "{correct}/100 held-out documents");
    assert!(matches!(
        embed_document::<&str>(&e, &[], Aggregation::Mean, None),
        Err(Error::Unembeddable(_))
    ));
}

#[test]
fn persistence_round_trips_every_method() {
    let (caps, _) = two_clusters(60, 12);
    let corpus = train_corpus(&caps);
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for method in Method::ALL {
        let cfg = EmbeddingConfig {
            epochs: Some(2),
            ..small(method, 5, 4)
        };
        let e = train_text(&corpus, &cfg).unwrap().embedder;
        let path = dir.path().join(format!("{method}.bin"));
        save_embedder(&e, &path).unwrap();
        let back = load_embedder(&path).unwrap();
        assert_eq!(back.method(), method);
        assert_eq!(back, e);
        for _ in 0..100 {
            let t = format!("{}{}", if rng.random_bool(0.5) { "a" } else { "b" }, rng.random_range(0..25));
            let a = embed_document(&e, &[t.as_str()], Aggregation::Mean, None).ok();
            let b = embed_document(&back, &[t.as_str()], Aggregation::Mean, None).ok();
            let bits = |v: Option<Vec<f64>>| v.map(|v| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            assert_eq!(bits(a), bits(b));
        }
        let bytes = write_embedder(&e);
        assert_eq!(write_embedder(&back), bytes);
        for cut in [0, 3, 8, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(read_embedder(&bytes[..cut]), Err(Error::Format(_))));
        }
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(read_embedder(&wrong), Err(Error::Format(_))));
        let mut version = bytes.clone();
        version[4] = 99;
        assert!(matches!(read_embedder(&version), Err(Error::Format(_))));
    }
}

#[test]
fn word_vector_export_format() {
    let (caps, _) = two_clusters(20, 13);
    let cfg = EmbeddingConfig {
        epochs: Some(1),
        ..small(Method::Glove, 3, 0)
    };
    let e = train_glove(&train_corpus(&caps), &cfg).unwrap().embedder;
    let mut out = Vec::new();
    websem_core::text::export_word_vectors(&e, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("{} 3", e.vocab().len()));
    for line in lines {
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts.len(), 4);
        let v: Vec<f64> = parts[1..].iter().map(|p| p.parse().unwrap()).collect();
        assert_eq!(v, e.word_vector(parts[0]).unwrap());
    }
}
