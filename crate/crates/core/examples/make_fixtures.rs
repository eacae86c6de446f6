//! Regenerates the synthetic fixtures under `tests/fixtures/`:
//! a three-topic corpus, post- and verdict-level EMB1 files, and a doubly
//! annotated subset.
//!
//! cargo run -p conflict-core --example make_fixtures

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use conflict_core::annotation::{Aspect, Label};
use conflict_core::corpus::{verdict_id, write_corpus, Comment, Post};
use conflict_core::embedding::{write_embeddings, EmbeddingMatrix};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DIM: usize = 16;
const POSTS_PER_TOPIC: usize = 40;

const TOPICS: [(&str, &[&str]); 3] = [
    (
        "wedding",
        &[
            "skipping my brother's wedding",
            "not inviting my cousin to the wedding",
            "wearing white to a friend's wedding",
            "refusing to be a bridesmaid",
        ],
    ),
    (
        "money",
        &[
            "asking my roommate to pay rent on time",
            "not lending money to my sister again",
            "splitting the bill by what each person ordered",
            "charging my friend for gas",
        ],
    ),
    (
        "pets",
        &[
            "rehoming my partner's cat",
            "asking my neighbour to leash their dog",
            "not letting my kid adopt a hamster",
            "refusing to pet-sit for my coworker",
        ],
    ),
];

const NTA_COMMENTS: &[&str] = &[
    "NTA, that was completely reasonable.",
    "NTA. You set a boundary and they ignored it.",
    "Not the asshole here, they overreacted.",
    "nta, I would have done the same thing",
    "You are not an asshole for this at all.",
];

const YTA_COMMENTS: &[&str] = &[
    "YTA. You knew how much this meant to them.",
    "yta and you know it",
    "You're the asshole, apologise.",
    "Honestly YTA here.",
    "You are the asshole for going behind their back.",
];

const OTHER_COMMENTS: &[&str] = &[
    "ESH, everyone behaved badly.",
    "Info: how old are the kids?",
    "NTA for asking but YTA for how you asked.",
    "This happened to me once too.",
];

fn gaussian(rng: &mut ChaCha8Rng) -> f32 {
    StandardNormal.sample(rng)
}

fn blob_point(rng: &mut ChaCha8Rng, topic: usize, offset: usize) -> Vec<f32> {
    (0..DIM)
        .map(|k| {
            let center = if k == topic * 4 + offset { 4.0 } else { 0.0 };
            center + 0.3 * gaussian(rng)
        })
        .collect()
}

fn write_emb(path: &Path, ids: Vec<String>, values: Vec<f32>) {
    let m = EmbeddingMatrix::new(ids, DIM, values).expect("valid matrix");
    write_embeddings(BufWriter::new(File::create(path).expect("create")), &m).expect("write");
}

fn main() {
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(&out).expect("fixture dir");
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);

    let mut posts = Vec::new();
    let mut situation = (Vec::new(), Vec::new());
    let mut fulltext = (Vec::new(), Vec::new());
    let mut verdicts = (Vec::new(), Vec::new());
    let u: Vec<f32> = (0..DIM).map(|_| gaussian(&mut rng)).collect();
    let u_norm = u.iter().map(|x| x * x).sum::<f32>().sqrt();

    for (t, (topic, situations)) in TOPICS.iter().enumerate() {
        for k in 0..POSTS_PER_TOPIC {
            let post_id = format!("{topic}{k:02}");
            let what = situations.choose(&mut rng).expect("non-empty");
            let mut comments = Vec::new();
            for c in 0..rng.random_range(3..7) {
                let roll: f64 = rng.random();
                let (body, label) = if roll < 0.55 {
                    (*NTA_COMMENTS.choose(&mut rng).unwrap(), Some(0))
                } else if roll < 0.8 {
                    (*YTA_COMMENTS.choose(&mut rng).unwrap(), Some(1))
                } else {
                    (*OTHER_COMMENTS.choose(&mut rng).unwrap(), None)
                };
                let comment_id = format!("c{c}");
                if let Some(y) = label {
                    let sign = if y == 1 { 1.0 } else { -1.0 };
                    verdicts.0.push(verdict_id(&post_id, &comment_id));
                    verdicts
                        .1
                        .extend(u.iter().map(|x| sign * 3.0 * x / u_norm + gaussian(&mut rng)));
                }
                comments.push(Comment {
                    id: comment_id,
                    post_id: post_id.clone(),
                    body: body.to_string(),
                });
            }
            situation.0.push(post_id.clone());
            situation.1.extend(blob_point(&mut rng, t, 0));
            fulltext.0.push(post_id.clone());
            fulltext.1.extend(blob_point(&mut rng, t, 1));
            posts.push(Post {
                id: post_id,
                title: format!("AITA for {what}?"),
                situation: String::new(),
                body: format!("Throwaway. This is about {topic}. I ended up {what} and now people are upset."),
                comments,
            });
        }
    }

    write_corpus(BufWriter::new(File::create(out.join("corpus.jsonl")).unwrap()), &posts).unwrap();
    write_emb(&out.join("situation.emb1"), situation.0, situation.1);
    write_emb(&out.join("fulltext.emb1"), fulltext.0, fulltext.1);
    write_emb(&out.join("verdict.emb1"), verdicts.0, verdicts.1);

    // Two annotators per post with 80% agreement per aspect. A third
    // annotator fails an attention check everywhere.
    let mut csv = String::from(
        "post_id,annotator_id,disagreement,emotion,interference,duration,manifestation,num_people,attn1,attn2\n",
    );
    for post in &posts {
        let first: Vec<Label> = Aspect::ALL
            .iter()
            .map(|a| *a.raw_labels().choose(&mut rng).unwrap())
            .collect();
        let second: Vec<Label> = Aspect::ALL
            .iter()
            .zip(&first)
            .map(|(a, &l)| {
                if rng.random_bool(0.8) {
                    l
                } else {
                    *a.raw_labels().choose(&mut rng).unwrap()
                }
            })
            .collect();
        for (who, labels, attn) in [("ann_a", &first, "pass"), ("ann_b", &second, "pass"), ("ann_x", &second, "fail")] {
            let mut row = format!("{},{who}", post.id);
            for l in labels {
                let _ = write!(row, ",{l}");
            }
            let _ = writeln!(row, ",pass,{attn}");
            csv.push_str(&row);
        }
    }
    std::fs::write(out.join("annotations.csv"), csv).unwrap();
    println!("fixtures written to {}", out.display());
}
