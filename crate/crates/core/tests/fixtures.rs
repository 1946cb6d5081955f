use chronodiff::diff::{build_animation, sliding_sequence, AnimationTiming};
use chronodiff::fixtures::{self, FWS_URL, NIEHS_URL};
use chronodiff::index::{ChangeIndex, Field};
use chronodiff::ingest::{canonicalize_url, parse_warc, ResponseReader};
use chronodiff::pipeline::{build_from_records, BuildOptions};
use chronodiff::query::{execute, find_chain, ChangeQuery, ChangeType, Mark};
use chronodiff::replay::closest_memento;

fn fixture_index() -> ChangeIndex {
    let warc = fixtures::fixture_warc();
    let (html, stats) = parse_warc(std::io::Cursor::new(warc.clone())).unwrap();
    assert_eq!(stats.responses, 10);
    assert_eq!(html.len(), 9);
    let all: Vec<_> = ResponseReader::new(std::io::Cursor::new(warc)).unwrap().collect::<Result<_, _>>().unwrap();
    let resources: Vec<_> = all.into_iter().filter(|r| !r.is_html()).collect();
    let (index, report) = build_from_records(html, resources, BuildOptions::default()).unwrap();
    assert_eq!(report.skipped_status, 1);
    assert_eq!(report.chains, 2);
    index
}

#[test]
fn niehs_pollution_deleted_between_february_and_march_2017() {
    let index = fixture_index();
    let hits = execute(&ChangeQuery::new(ChangeType::DeletedTerm, "pollution"), &index).unwrap();
    assert_eq!(hits.len(), 1);
    let h = &hits[0];
    let caps = fixtures::niehs_captures();
    assert_eq!((h.change_interval.after, h.change_interval.until), (caps[1], caps[2]));
    assert!(!h.partial);
    assert_eq!(h.delta, 3);
    assert!(h.addition_version.is_none());
    assert!(h.snippet.marked(Mark::Deleted).any(|t| t == "pollution"));
    assert_eq!(index.lookup(Field::Deleted, "pollution").len(), 1);

    // The two later captures are token-identical and coalesce.
    let chain = find_chain(&index, NIEHS_URL).unwrap();
    assert_eq!(chain.versions.len(), 3);
    assert_eq!(chain.versions[2].members.len(), 2);
    assert_eq!(chain.versions[2].validity.end, None);
}

#[test]
fn fws_phrase_adjacency() {
    let index = fixture_index();
    let hits = execute(&ChangeQuery::new(ChangeType::DeletedPhrase, "endangered species"), &index).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].canonical_url, canonicalize_url(FWS_URL).unwrap());
    assert!(execute(&ChangeQuery::new(ChangeType::DeletedPhrase, "species endangered"), &index).unwrap().is_empty());
    assert!(execute(&ChangeQuery::new(ChangeType::AddedPhrase, "endangered species"), &index).unwrap().is_empty());
    let sci = execute(&ChangeQuery::new(ChangeType::DeletedTerm, "scientific"), &index).unwrap();
    assert_eq!(sci.len(), 1);
    assert_eq!(sci[0].addition_version, None);
    assert_eq!(sci[0].lifespan.first_version, 0);
}

#[test]
fn sliding_and_animation() {
    let index = fixture_index();
    let chain = find_chain(&index, FWS_URL).unwrap();
    let seq = sliding_sequence(chain);
    assert_eq!(seq.entries.len(), 2);
    assert!(seq.entries.iter().all(|e| !e.identical));
    let pre = index.replay().exact(&chain.canonical_url, chain.versions[0].first_capture()).unwrap();
    let post = index.replay().exact(&chain.canonical_url, chain.versions[1].first_capture()).unwrap();
    let doc = String::from_utf8(build_animation(&pre.body, &post.body, AnimationTiming::default()).unwrap()).unwrap();
    assert!(doc.contains("cd-del"));
    assert!(doc.contains("endangered species"));
}

#[test]
fn replay_closest() {
    let index = fixture_index();
    let chain = find_chain(&index, NIEHS_URL).unwrap();
    let caps = fixtures::niehs_captures();
    let (v, meta) = closest_memento(chain, caps[2] + chrono::Duration::days(1)).unwrap();
    assert_eq!((v, meta.capture_datetime), (2, caps[2]));
    let stored = index.replay().closest(&chain.canonical_url, caps[0]).unwrap();
    assert_eq!(&*stored.body, &fixtures::niehs_records()[0].body[..]);
    let logo = canonicalize_url("https://www.fws.gov/images/logo.png").unwrap();
    assert_eq!(index.replay().captures(&logo).len(), 1);
}

#[test]
fn persisted_fixture_answers_the_same() {
    let index = fixture_index();
    let dir = tempfile::tempdir().unwrap();
    index.persist(dir.path()).unwrap();
    let back = ChangeIndex::load(dir.path()).unwrap();
    for kind in ChangeType::ALL {
        for q in ["pollution", "endangered species", "air quality", "scientific"] {
            let q = ChangeQuery::new(kind, q);
            assert_eq!(execute(&q, &index), execute(&q, &back));
        }
    }
}
