//! Synthetic labeled corpus used as the bundled test fixture.
//!
//! Per-publisher article and source counts follow the dataset breakdown the
//! tool was designed around (26 articles; 121 Trump, 100 Clinton and 365
//! other attributions). Source mentions are drawn from scenario pools that
//! plant a known mix of classifier failures: sources with no coreference
//! chain, chains whose representative mention matches nothing, mislinked
//! chains, non-target actors named after a candidate, and rows the
//! annotators flagged as ambiguous.

use std::fs;
use std::io;
use std::path::Path;

use attrib_core::corpus::{
    write_attribution_str, write_token_xml, ArticleBuilder, ArticleKey, AttributionKey, ConsolidatedArticle,
    CorpusError,
};
use attrib_core::labels::{
    write_labels_csv, AttrType, Dataset, LabelError, LabeledAttribution, SourceLabel, StanceType, Valence,
};
use attrib_core::classifier::CandidateLabel;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 2016;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublisherPlan {
    pub name: &'static str,
    pub articles: usize,
    pub trump: usize,
    pub clinton: usize,
    pub other: usize,
}

const fn plan(name: &'static str, articles: usize, trump: usize, clinton: usize, other: usize) -> PublisherPlan {
    PublisherPlan { name, articles, trump, clinton, other }
}

pub const PUBLISHERS: [PublisherPlan; 7] = [
    plan("breitbart", 3, 11, 28, 45),
    plan("huffpost", 3, 11, 10, 29),
    plan("nyt", 5, 23, 11, 70),
    plan("politico", 4, 40, 33, 64),
    plan("usa-today", 4, 11, 10, 27),
    plan("wash-post", 3, 19, 11, 94),
    plan("west-journal", 4, 8, 4, 36),
];

/// How a source mention is linked into the coreference layer.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Link {
    /// No chain touches the source.
    None,
    /// The source is itself the representative mention.
    SelfRep,
    /// The source is a non-representative mention of a chain headed by this text.
    Rep(&'static str),
}

#[derive(Debug, Clone)]
struct Scenario {
    gold: SourceLabel,
    source: &'static str,
    link: Link,
    honorific: Option<&'static str>,
    note: Option<&'static str>,
}

fn sc(gold: SourceLabel, source: &'static str, link: Link) -> Scenario {
    Scenario { gold, source, link, honorific: None, note: None }
}

fn repeat(out: &mut Vec<Scenario>, n: usize, s: Scenario) {
    out.extend(std::iter::repeat_n(s, n));
}

const AMBIGUOUS_NOTE: &str = "ambiguous source, reviewers split";

/// Scenario pool for one gold class. Planted failures come first; the rest
/// of the pool is filled by cycling the correct scenarios.
fn pool(class: CandidateLabel, total: usize) -> Vec<Scenario> {
    use Link::*;
    use SourceLabel as S;
    let mut errors = Vec::new();
    let mut correct = Vec::new();
    match class {
        CandidateLabel::Trump => {
            repeat(&mut errors, 5, sc(S::Trump, "hopeful future president Mr. Donald John Trump", None));
            repeat(&mut errors, 4, sc(S::Trump, "he", None));
            repeat(&mut errors, 6, sc(S::Trump, "he", Rep("the leader")));
            repeat(
                &mut errors,
                3,
                Scenario { note: Some(AMBIGUOUS_NOTE), ..sc(S::Trump, "the front-runner", None) },
            );
            repeat(&mut errors, 5, sc(S::Trump, "Trump", Rep("Bill Clinton")));
            repeat(&mut correct, 10, sc(S::Trump, "The Trump Campaign", None));
            repeat(&mut correct, 10, sc(S::Trump, "Donald Trump", None));
            repeat(&mut correct, 30, sc(S::Trump, "Trump", Rep("Donald Trump")));
            repeat(&mut correct, 28, sc(S::Trump, "he", Rep("Donald Trump")));
            repeat(&mut correct, 12, Scenario { honorific: Some("Mr."), ..sc(S::Trump, "Mr. Trump", SelfRep) });
            repeat(&mut correct, 8, sc(S::Trump, "Donald J. Trump", SelfRep));
        }
        CandidateLabel::Clinton => {
            repeat(&mut errors, 5, sc(S::Clinton, "she", None));
            repeat(&mut errors, 4, sc(S::Clinton, "the former secretary of state", None));
            repeat(&mut errors, 5, sc(S::Clinton, "she", Rep("the nominee")));
            repeat(
                &mut errors,
                2,
                Scenario { note: Some(AMBIGUOUS_NOTE), ..sc(S::Clinton, "the Democratic nominee", None) },
            );
            repeat(&mut errors, 3, sc(S::Clinton, "Clinton", Rep("Bill Clinton")));
            repeat(&mut correct, 8, sc(S::Clinton, "The Clinton Campaign", None));
            repeat(
                &mut correct,
                7,
                sc(S::Clinton, "Hillary Clinton, wife of former president Bill Clinton", None),
            );
            repeat(&mut correct, 26, sc(S::Clinton, "Clinton", Rep("Hillary Clinton")));
            repeat(&mut correct, 24, sc(S::Clinton, "she", Rep("Hillary Clinton")));
            repeat(
                &mut correct,
                10,
                Scenario { honorific: Some("Mrs."), ..sc(S::Clinton, "Mrs. Clinton", SelfRep) },
            );
            repeat(&mut correct, 6, sc(S::Clinton, "Hillary Rodham Clinton", SelfRep));
        }
        CandidateLabel::Other => {
            repeat(&mut errors, 3, sc(S::OtherPerson, "a Trump adviser", None));
            repeat(
                &mut errors,
                2,
                Scenario {
                    note: Some(AMBIGUOUS_NOTE),
                    ..sc(S::OtherPerson, "Trump Campaign Spokesman, Hope Hicks", None)
                },
            );
            repeat(&mut errors, 3, sc(S::OtherPerson, "A 2008 Clinton Veteran", None));
            repeat(&mut errors, 1, Scenario { note: Some(AMBIGUOUS_NOTE), ..sc(S::OtherPerson, "a Clinton aide", None) });
            repeat(&mut correct, 10, sc(S::Organization, "officials", None));
            repeat(&mut correct, 9, sc(S::Organization, "the union", None));
            repeat(&mut correct, 8, sc(S::Organization, "The Clinton Administration", None));
            repeat(&mut correct, 9, sc(S::Unknown, "a spokesperson", None));
            repeat(&mut correct, 8, sc(S::OtherPerson, "Donald Trump Jr.", None));
            repeat(&mut correct, 40, sc(S::OtherPerson, "he", Rep("Bill Clinton")));
            repeat(&mut correct, 36, sc(S::Sanders, "Sanders", Rep("Bernie Sanders")));
            repeat(&mut correct, 30, sc(S::Cruz, "Cruz", Rep("Ted Cruz")));
            repeat(&mut correct, 34, sc(S::OtherPerson, "she", Rep("Elizabeth Warren")));
            repeat(&mut correct, 34, sc(S::Organization, "the group", Rep("the Sierra Club")));
            repeat(&mut correct, 24, sc(S::OtherPerson, "he", Rep("Donald Trump Jr.")));
            repeat(&mut correct, 12, sc(S::OtherPerson, "Melania Trump", SelfRep));
            repeat(&mut correct, 34, sc(S::OtherPerson, "the senator", Rep("Marco Rubio")));
            repeat(&mut correct, 30, sc(S::Organization, "the company", Rep("Goldman Sachs")));
            repeat(&mut correct, 28, sc(S::OtherPerson, "the governor", Rep("Chris Christie")));
            repeat(&mut correct, 10, sc(S::OtherPerson, "Chelsea Clinton", SelfRep));
        }
    }
    errors.truncate(total);
    let fill = total - errors.len();
    errors.extend(correct.iter().cycle().take(fill).cloned());
    errors
}

fn pick<T: Copy, R: Rng>(rng: &mut R, weighted: &[(T, u32)]) -> T {
    let total: u32 = weighted.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen_range(0..total);
    for &(v, w) in weighted {
        if x < w {
            return v;
        }
        x -= w;
    }
    unreachable!("weights cover the draw")
}

fn stance<R: Rng>(rng: &mut R, gold: SourceLabel) -> StanceType {
    use StanceType::*;
    match gold {
        SourceLabel::Trump => pick(
            rng,
            &[(FavoursTrump, 45), (AgainstClinton, 30), (AgainstOther, 10), (NeutralBoth, 10), (FavoursOther, 5)],
        ),
        SourceLabel::Clinton => pick(
            rng,
            &[(FavoursClinton, 40), (AgainstTrump, 35), (NeutralBoth, 15), (FavoursOther, 5), (AgainstOther, 5)],
        ),
        _ => pick(
            rng,
            &[
                (NeutralBoth, 30),
                (AgainstTrump, 15),
                (AgainstClinton, 15),
                (FavoursTrump, 10),
                (FavoursClinton, 10),
                (FavoursOther, 8),
                (AgainstOther, 7),
                (FavoursBoth, 2),
                (AgainstBoth, 3),
            ],
        ),
    }
}

fn cue_valence<R: Rng>(rng: &mut R, s: StanceType) -> Valence {
    use Valence::*;
    let name = s.as_str();
    if name.starts_with("favours") {
        pick(rng, &[(Positive, 60), (Neutral, 30), (Negative, 10)])
    } else if name.starts_with("against") {
        pick(rng, &[(Negative, 60), (Neutral, 30), (Positive, 10)])
    } else {
        pick(rng, &[(Neutral, 70), (Positive, 15), (Negative, 15)])
    }
}

fn attr_type<R: Rng>(rng: &mut R, gold: SourceLabel) -> AttrType {
    use AttrType::*;
    match gold {
        SourceLabel::Trump => pick(
            rng,
            &[(PersonalStance, 35), (SpeechSnippet, 20), (PoliticalPlatform, 15), (Headline, 5), (ClintonCallout, 20), (OtherCallout, 5)],
        ),
        SourceLabel::Clinton => pick(
            rng,
            &[(PersonalStance, 35), (SpeechSnippet, 20), (PoliticalPlatform, 15), (Headline, 5), (TrumpCallout, 20), (OtherCallout, 5)],
        ),
        _ => pick(
            rng,
            &[
                (GroupCallout, 20),
                (TrumpCallout, 20),
                (ClintonCallout, 20),
                (OtherCallout, 15),
                (PersonalStance, 10),
                (Headline, 5),
                (SandersCallout, 5),
                (CruzCallout, 5),
            ],
        ),
    }
}

fn medium<R: Rng>(rng: &mut R, gold: SourceLabel) -> &'static str {
    match gold {
        SourceLabel::Trump => pick(
            rng,
            &[("rally", 25), ("tweet", 25), ("interview", 20), ("statement", 15), ("debate", 10), ("formal_speech", 5)],
        ),
        SourceLabel::Clinton => pick(
            rng,
            &[("formal_speech", 25), ("statement", 25), ("interview", 20), ("debate", 15), ("press_release", 10), ("rally", 5)],
        ),
        _ => pick(rng, &[("statement", 40), ("interview", 30), ("press_release", 20), ("unknown", 10)]),
    }
}

const CUES: [&str; 8] = ["said", "told reporters", "argued", "claimed", "wrote", "insisted", "warned", "added"];
const LEADS: [&str; 5] = ["On Monday, ", "Later, ", "In Ohio, ", "At the event, ", "Meanwhile, "];
const EVENTS: [&str; 5] = [
    "arrived in Ohio on Monday",
    "spoke to supporters",
    "met with donors",
    "appeared on television",
    "released a schedule",
];
const CONTENTS: [&str; 10] = [
    "we are going to win this state",
    "the numbers speak for themselves",
    "this election is about jobs",
    "nobody believes those polls",
    "the plan will pay for itself",
    "voters deserve a real answer",
    "the debate was a turning point",
    "our campaign has the momentum",
    "that claim is simply false",
    "the economy needs a new direction",
];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub articles: Vec<ConsolidatedArticle>,
    pub labels: Dataset,
}

#[derive(Debug)]
pub enum SynthError {
    Corpus(CorpusError),
    Labels(LabelError),
    Io(io::Error),
}

impl std::fmt::Display for SynthError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynthError::Corpus(e) => write!(f, "{e}"),
            SynthError::Labels(e) => write!(f, "{e}"),
            SynthError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SynthError {}

impl From<CorpusError> for SynthError {
    fn from(e: CorpusError) -> Self {
        SynthError::Corpus(e)
    }
}

impl From<LabelError> for SynthError {
    fn from(e: LabelError) -> Self {
        SynthError::Labels(e)
    }
}

impl From<io::Error> for SynthError {
    fn from(e: io::Error) -> Self {
        SynthError::Io(e)
    }
}

/// Build the fixture for `plans`. Identical inputs give identical output.
pub fn generate(plans: &[PublisherPlan], seed: u64) -> Result<Fixture, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let totals = |f: fn(&PublisherPlan) -> usize| plans.iter().map(f).sum::<usize>();
    let mut pools = [
        pool(CandidateLabel::Trump, totals(|p| p.trump)),
        pool(CandidateLabel::Clinton, totals(|p| p.clinton)),
        pool(CandidateLabel::Other, totals(|p| p.other)),
    ];
    for p in &mut pools {
        p.shuffle(&mut rng);
    }
    let mut cursors = [0usize; 3];

    let mut articles = Vec::new();
    let mut labels = Vec::new();
    for plan in plans {
        let mut rows: Vec<Scenario> = Vec::new();
        for (k, n) in [plan.trump, plan.clinton, plan.other].into_iter().enumerate() {
            rows.extend(pools[k][cursors[k]..cursors[k] + n].iter().cloned());
            cursors[k] += n;
        }
        rows.shuffle(&mut rng);
        let mut per_article: Vec<Vec<Scenario>> = vec![Vec::new(); plan.articles];
        for (i, s) in rows.into_iter().enumerate() {
            per_article[i % plan.articles].push(s);
        }
        for (ai, scenarios) in per_article.into_iter().enumerate() {
            let key = ArticleKey::new(plan.name, format!("article-{:02}", ai + 1));
            let (article, rows) = build_article(&mut rng, key, &scenarios)?;
            articles.push(article);
            labels.extend(rows);
        }
    }
    Ok(Fixture { articles, labels: Dataset::from_rows(labels)? })
}

fn build_article<R: Rng>(
    rng: &mut R,
    key: ArticleKey,
    scenarios: &[Scenario],
) -> Result<(ConsolidatedArticle, Vec<LabeledAttribution>), SynthError> {
    let mut b = ArticleBuilder::new(key.clone());
    let mut rows = Vec::new();
    for s in scenarios {
        let rep_span = match s.link {
            Link::Rep(rep) => {
                b.append("Earlier, ");
                let span = b.append(rep);
                b.append(&format!(" {}.", EVENTS[rng.gen_range(0..EVENTS.len())]));
                b.end_sentence();
                b.append(" ");
                Some(span)
            }
            _ => None,
        };

        let stance = stance(rng, s.gold);
        let attr = attr_type(rng, s.gold);
        let content_text = CONTENTS[rng.gen_range(0..CONTENTS.len())];
        let (source, cue, content) = if attr == AttrType::Headline {
            // headline attributions carry no cue
            let src = b.append(s.source);
            b.append(": \"");
            let content = b.append(content_text);
            b.append("\"");
            (src, None, content)
        } else {
            b.append(LEADS[rng.gen_range(0..LEADS.len())]);
            let src = b.append(s.source);
            b.append(" ");
            let cue = b.append(CUES[rng.gen_range(0..CUES.len())]);
            b.append(" \"");
            let content = b.append(content_text);
            b.append(".\"");
            (src, Some(cue), content)
        };
        b.end_sentence();
        b.append(" ");

        match (&s.link, rep_span) {
            (Link::Rep(_), Some(rep)) => {
                b.add_chain(rep, &[source]);
            }
            (Link::SelfRep, _) => {
                b.add_chain(source, &[]);
            }
            _ => {}
        }
        let attr_id = b.add_attribution(vec![source], cue.into_iter().collect(), vec![content]);
        rows.push(LabeledAttribution {
            key: AttributionKey::new(&key, attr_id),
            source_label: s.gold,
            honorific_text: s.honorific.map(str::to_string),
            source_valence: pick(rng, &[(Valence::Neutral, 70), (Valence::Positive, 15), (Valence::Negative, 15)]),
            cue_valence: cue_valence(rng, stance),
            attr_type: attr,
            stance_type: stance,
            medium: medium(rng, s.gold).to_string(),
            is_direct_quote: rng.gen_bool(0.6),
            note: s.note.map(str::to_string),
        });
    }
    Ok((b.build()?, rows))
}

/// Write `<corpus_dir>/<publisher>/<article>.{txt,xml,attr}` and the labels CSV.
pub fn write_fixture(fixture: &Fixture, corpus_dir: &Path, labels_csv: &Path) -> Result<(), SynthError> {
    for a in &fixture.articles {
        let dir = corpus_dir.join(&a.key.publisher_name);
        fs::create_dir_all(&dir)?;
        let base = dir.join(&a.key.article_name);
        fs::write(base.with_extension("txt"), &a.raw_text)?;
        fs::write(base.with_extension("xml"), write_token_xml(&a.tokens, &a.coref_chains))?;
        fs::write(base.with_extension("attr"), write_attribution_str(&a.attributions))?;
    }
    if let Some(parent) = labels_csv.parent() {
        fs::create_dir_all(parent)?;
    }
    write_labels_csv(&fixture.labels, labels_csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_have_requested_sizes() {
        assert_eq!(pool(CandidateLabel::Trump, 121).len(), 121);
        assert_eq!(pool(CandidateLabel::Clinton, 100).len(), 100);
        assert_eq!(pool(CandidateLabel::Other, 365).len(), 365);
        assert_eq!(pool(CandidateLabel::Trump, 4).len(), 4);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&PUBLISHERS[..2], 1).unwrap();
        let b = generate(&PUBLISHERS[..2], 1).unwrap();
        assert_eq!(a.labels.rows(), b.labels.rows());
        assert_eq!(a.articles[0].raw_text, b.articles[0].raw_text);
        assert_eq!(a.articles.len(), 6);
    }
}
