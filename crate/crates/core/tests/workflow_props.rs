//! Workflow invariants over random networks, driven by a provider that reads
//! the candidate list out of each prompt and picks from it.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use ideagraph::corpus::toy::{self, ToyCorpusSpec};
use ideagraph::llm::{ChatProvider, ChatRequest, ChatResponse, Gateway, LlmError, TemplateId};
use ideagraph::workflow::{self, IdeaStack, KeywordChange, RunOutcome, StopReason, WorkflowConfig};
use ideagraph::{Keyword, SciNetwork};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Chooser {
    rng: Mutex<ChaCha8Rng>,
    seeds: Vec<String>,
    /// Set when no valid replacement existed and a bad reply was sent on purpose.
    stuck: AtomicBool,
}

fn candidates(prompt: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut lines = prompt.lines().peekable();
    while let Some(line) = lines.next() {
        let t = line.trim_start();
        let Some(rest) = t.split_once(". Candidate keyword: ").map(|(_, k)| k) else {
            continue;
        };
        let anchor = lines
            .next()
            .and_then(|l| l.trim_start().strip_prefix("Connected to: "))
            .expect("anchor line follows the candidate");
        out.push((rest.to_string(), anchor.to_string()));
    }
    out
}

/// The most recent keyword list in the history section.
fn current_keywords(prompt: &str) -> Vec<String> {
    let line = prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("Keywords: "))
        .expect("history shows at least one round");
    line.split(", ").map(str::to_string).collect()
}

impl Chooser {
    fn reply(&self, req: &ChatRequest) -> String {
        let prompt = &req.messages.last().unwrap().content;
        let mut rng = self.rng.lock().unwrap();
        match req.template {
            TemplateId::RelationAnalysis => "they appear together".into(),
            TemplateId::IdeaFormulation => {
                "Research Background: b\n\nResearch Idea: i\n\nImplementation Approach: x".into()
            }
            TemplateId::Review => format!(
                "Novelty Score and Description: {} - n\nFeasibility Score and Description: {} - f",
                rng.random_range(1..=5),
                rng.random_range(1..=5)
            ),
            TemplateId::Router => {
                let a = if rng.random_bool(0.5) {
                    "Keyword_Replacement"
                } else {
                    "Idea_Rewrite"
                };
                format!("ACTION: {a}\nREASON: r")
            }
            TemplateId::KeywordSelection => {
                let (k, a) = candidates(prompt)
                    .choose(&mut *rng)
                    .cloned()
                    .expect("selection has candidates");
                format!("NEW_KEYWORD: {k}\nCONNECTED_TO: {a}\nREASON_FOR_SELECTION: r")
            }
            TemplateId::KeywordReplacement => {
                let flexible: Vec<String> = current_keywords(prompt)
                    .into_iter()
                    .filter(|k| !self.seeds.contains(k))
                    .collect();
                let options: Vec<(String, String, String)> = candidates(prompt)
                    .into_iter()
                    .flat_map(|(k, a)| {
                        flexible
                            .iter()
                            .filter(|old| **old != a)
                            .map(|old| (k.clone(), a.clone(), old.clone()))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                match options.choose(&mut *rng) {
                    Some((k, a, old)) => format!(
                        "REPLACEMENT_KEYWORD: {k}\nCONNECTED_TO: {a}\nREPLACED_KEYWORD: {old}\nREASON_FOR_REPLACEMENT: r"
                    ),
                    None => {
                        self.stuck.store(true, Ordering::SeqCst);
                        "no valid replacement".into()
                    }
                }
            }
            TemplateId::Extraction => "KEYWORDS: a; b; c".into(),
        }
    }
}

impl ChatProvider for Chooser {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        Ok(ChatResponse::text(self.reply(req)))
    }

    fn identity(&self) -> String {
        "chooser".into()
    }
}

fn network(seed: u64) -> SciNetwork {
    let spec = ToyCorpusSpec {
        papers: 60,
        vocabulary: 30,
        seed,
        ..Default::default()
    };
    let mut net = SciNetwork::new();
    for p in toy::generate(&spec).unwrap() {
        let ks: Vec<Keyword> = p
            .keywords
            .as_ref()
            .unwrap()
            .iter()
            .map(|k| Keyword::new(k).unwrap())
            .collect();
        net.add_paper(p, &ks).unwrap();
    }
    net
}

fn run_once(
    net: &SciNetwork,
    cfg: &WorkflowConfig,
    seeds: &[Keyword],
    provider_seed: u64,
) -> (RunOutcome, bool) {
    let chooser = Arc::new(Chooser {
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(provider_seed)),
        seeds: seeds.iter().map(|s| s.to_string()).collect(),
        stuck: AtomicBool::new(false),
    });
    let llm = Gateway::new(chooser.clone());
    let critic = cfg.critic_enabled.then_some(&llm);
    let o = workflow::run(cfg, seeds, net, &llm, critic).unwrap();
    (o, chooser.stuck.load(Ordering::SeqCst))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_invariants(
        graph_seed in 0u64..1000,
        provider_seed in any::<u64>(),
        n_seeds in 1usize..=3,
        extra in prop_oneof![1 => Just(0usize), 4 => 1usize..=3],
        max_evolve_rounds in 0usize..=6,
        threshold in prop_oneof![1 => Just(4u8), 3 => Just(5u8)],
        evolve_enabled in prop::bool::weighted(0.8),
        critic_enabled in any::<bool>(),
    ) {
        let net = network(graph_seed);
        let first = net.papers().next().unwrap().id.clone();
        let seeds: Vec<Keyword> = net.paper_keywords(&first).unwrap().iter().take(n_seeds).cloned().collect();
        let cfg = WorkflowConfig {
            l_max: seeds.len() + extra,
            max_evolve_rounds,
            stop_threshold: threshold,
            evolve_enabled,
            critic_enabled,
            ..Default::default()
        };
        let (o, stuck) = run_once(&net, &cfg, &seeds, provider_seed);
        if o.stop == StopReason::Aborted {
            prop_assert!(stuck, "aborted without cause: {:?}", o.error);
        }

        let rounds = o.stack.rounds();
        prop_assert!(!rounds.is_empty());
        let mut prev: Option<&[Keyword]> = None;
        for (t, r) in rounds.iter().enumerate() {
            prop_assert_eq!(r.round_no as usize, t + 1);
            // every seed stays
            for s in &seeds {
                prop_assert!(r.keywords.contains(s));
            }
            // growth then plateau
            let expanding = matches!(r.change, KeywordChange::Seed | KeywordChange::Added { .. });
            if expanding {
                prop_assert_eq!(r.keywords.len(), (seeds.len() + t).min(cfg.l_max));
            } else {
                prop_assert_eq!(r.keywords.len(), cfg.l_max);
            }
            if let (KeywordChange::Replaced { new, old, .. }, Some(p)) = (&r.change, prev) {
                prop_assert!(p.contains(old) && !p.contains(new));
                prop_assert!(r.keywords.contains(new) && !r.keywords.contains(old));
                prop_assert!(!seeds.contains(old));
            }
            if !critic_enabled {
                prop_assert!(r.review.is_none());
            }
            if !evolve_enabled {
                prop_assert!(expanding);
            }
            prev = Some(&r.keywords);
        }

        // rebuilding the stack round by round only ever appends to its serialization
        let mut rebuilt = IdeaStack::new(cfg.clone(), seeds.clone());
        let mut text = rebuilt.to_jsonl();
        let mut prompt = rebuilt.render_for_prompt();
        for r in rounds {
            rebuilt.push(r.clone()).unwrap();
            let next = rebuilt.to_jsonl();
            prop_assert!(next.starts_with(&text));
            text = next;
            let next_prompt = rebuilt.render_for_prompt();
            if rebuilt.len() > 1 {
                prop_assert!(next_prompt.starts_with(&prompt));
            }
            prompt = next_prompt;
        }

        // determinism
        let (again, _) = run_once(&net, &cfg, &seeds, provider_seed);
        prop_assert_eq!(again.to_record(), o.to_record());
    }
}
