//! Template banks and value pools for synthetic memory.
//!
//! Each query type has a bank of cue-bearing question templates and a bank of
//! paraphrases that avoid every hybrid rule cue. Background filler draws only
//! from vocabulary disjoint from the answer pools.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::QueryType;
use crate::store::StoreId;

use super::FactSlot;

const FIRST: &[&str] = &[
    "Jennifer", "Michael", "Priya", "Daniel", "Sofia", "Marcus", "Hana", "Luis", "Grace", "Tomas",
    "Amara", "Elena", "Kofi", "Ingrid", "Rafael", "Mei", "Oscar", "Leila", "Viktor", "Nadia",
];
const LAST: &[&str] = &[
    "Williams", "Torres", "Natarajan", "Okafor", "Lindqvist", "Bell", "Sato", "Ortega", "Kim",
    "Novak", "Haddad", "Fischer", "Mensah", "Rossi", "Kowalski", "Duarte", "Ivanova", "Brennan",
    "Achebe", "Moreau",
];
const CITIES: &[&str] = &[
    "Austin", "Denver", "Lisbon", "Osaka", "Toronto", "Nairobi", "Seattle", "Porto", "Vienna",
    "Melbourne", "Boston", "Dublin", "Faro", "Kyoto", "Oslo", "Santiago",
];
const COMPANIES: &[&str] = &[
    "TechCorp", "Northwind Labs", "BluePeak Systems", "Orbital Foods", "Granite Health",
    "Lumen Analytics", "Harbor Freightworks", "Quill Publishing",
];
const TITLES: &[&str] = &[
    "Senior Software Engineer", "Product Lead", "Data Analyst", "Staff Designer",
    "Engineering Director", "Research Scientist", "Principal Architect",
];
const DOGS: &[&str] = &["Biscuit", "Pepper", "Juniper", "Waffles", "Clementine", "Mochi", "Ziggy"];
const RESTAURANTS: &[&str] = &[
    "Casa Lupe", "Blue Lotus", "Trattoria Nonna", "Saffron House", "The Copper Pot", "Sushi Kaito",
];
const TEAMS: &[&str] = &["marketing team", "design team", "finance team", "platform team", "legal team"];
const TOPICS: &[&str] = &[
    "refinancing the mortgage", "the Kyoto trip itinerary", "half marathon training",
    "choosing a new laptop", "the garden renovation", "learning Portuguese",
    "adopting a rescue dog", "the kitchen remodel budget",
];
const CUISINES: &[&str] = &["Ethiopian", "Peruvian", "Lebanese", "Korean", "Georgian", "Vietnamese"];
const BOOKS: &[&str] = &[
    "Dune", "Emma", "Ulysses", "Beloved", "Middlemarch", "Rebecca", "Persuasion", "Kindred",
    "Solaris", "Frankenstein",
];
const WHEN: &[&str] = &["last week", "last month", "two weeks ago", "last spring", "in March"];

pub(super) fn pick<'a, R: Rng + ?Sized>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty pool")
}

fn person<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!("{} {}", pick(rng, FIRST), pick(rng, LAST))
}

fn phone<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!("555-{:03}-{:04}", rng.gen_range(200..1000), rng.gen_range(0..10000))
}

fn email<R: Rng + ?Sized>(rng: &mut R) -> String {
    let domains = ["techcorp.com", "northwind.io", "bluepeak.org"];
    format!(
        "{}.{}@{}",
        pick(rng, FIRST).to_lowercase(),
        pick(rng, LAST).to_lowercase(),
        pick(rng, &domains)
    )
}

fn time_of_day<R: Rng>(rng: &mut R) -> String {
    format!("{}:{}pm", rng.gen_range(1..=8), pick(rng, &["00", "15", "30", "45"]))
}

fn flight<R: Rng>(rng: &mut R) -> String {
    format!("{} {}", pick(rng, &["UA", "BA", "LH", "AC"]), rng.gen_range(100..1000))
}

/// Draws `k` distinct entries and joins them as "a, b and c".
fn listing<R: Rng>(rng: &mut R, pool: &[&str], k: usize) -> String {
    let chosen: Vec<&str> = pool.choose_multiple(rng, k).copied().collect();
    let (last, init) = chosen.split_last().expect("k > 0");
    format!("{} and {}", init.join(", "), last)
}

/// Current and historical values that never contain one another.
fn slot_pair<R: Rng>(rng: &mut R, name: &str, mut draw: impl FnMut(&mut R) -> String) -> FactSlot {
    let current = draw(rng);
    loop {
        let old = draw(rng);
        if !old.contains(&current) && !current.contains(&old) {
            return FactSlot::new(name, current, Some(old)).expect("distinct values");
        }
    }
}

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in slots {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    debug_assert!(!out.contains('{'), "unfilled template: {out}");
    out
}

/// One generated question with its memory content.
#[derive(Debug, Clone)]
pub struct Instance {
    pub text: String,
    pub answer: String,
    pub answer_items: Vec<(StoreId, String)>,
    pub distractor_items: Vec<(StoreId, String)>,
}

struct Ctx<'r, R: Rng> {
    rng: &'r mut R,
    paraphrase: bool,
    distractor: bool,
}

impl<R: Rng> Ctx<'_, R> {
    fn question(&mut self, explicit: &[&str], paraphrases: &[&str], slots: &[(&str, &str)]) -> String {
        let bank = if self.paraphrase { paraphrases } else { explicit };
        fill(pick(self.rng, bank), slots)
    }

    fn session(&mut self) -> (String, String, String) {
        (
            self.rng.gen_range(2..=30).to_string(),
            pick(self.rng, WHEN).to_string(),
            self.rng.gen_range(1..=12).to_string(),
        )
    }
}

pub fn instantiate<R: Rng>(t: QueryType, rng: &mut R, paraphrase: bool, distractor: bool) -> Instance {
    let mut cx = Ctx {
        rng,
        paraphrase,
        distractor,
    };
    match t {
        QueryType::SingleHop => single_hop(&mut cx),
        QueryType::SingleSession => single_session(&mut cx),
        QueryType::RecentSession => recent_session(&mut cx),
        QueryType::MultiHop => multi_hop(&mut cx),
        QueryType::MemoryCapacity => memory_capacity(&mut cx),
        QueryType::Temporal => temporal(&mut cx),
        QueryType::KnowledgeUpdate => knowledge_update(&mut cx),
    }
}

struct Attribute {
    phrase: &'static str,
    is_person: bool,
    summary: &'static str,
    draw: fn(&mut dyn rand::RngCore) -> String,
}

const ATTRIBUTES: &[Attribute] = &[
    Attribute {
        phrase: "phone number",
        is_person: false,
        summary: "Contact: Phone number is {v}.",
        draw: |r| phone(r),
    },
    Attribute {
        phrase: "email address",
        is_person: false,
        summary: "Contact: Email is {v}.",
        draw: |r| email(r),
    },
    Attribute {
        phrase: "home city",
        is_person: false,
        summary: "Profile: Lives in {v}.",
        draw: |r| pick(r, CITIES).to_string(),
    },
    Attribute {
        phrase: "employer",
        is_person: false,
        summary: "Profile: Works at {v}.",
        draw: |r| pick(r, COMPANIES).to_string(),
    },
    Attribute {
        phrase: "job title",
        is_person: false,
        summary: "Profile: Job title is {v}.",
        draw: |r| pick(r, TITLES).to_string(),
    },
    Attribute {
        phrase: "dog's name",
        is_person: false,
        summary: "Pets: Has a dog named {v}.",
        draw: |r| pick(r, DOGS).to_string(),
    },
    Attribute {
        phrase: "manager",
        is_person: true,
        summary: "Manager: {v}.",
        draw: |r| person(r),
    },
    Attribute {
        phrase: "mentor",
        is_person: true,
        summary: "Mentor: {v}.",
        draw: |r| person(r),
    },
];

fn single_hop<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    let attr = ATTRIBUTES.choose(cx.rng).expect("attributes");
    let draw = attr.draw;
    let slot = slot_pair(cx.rng, attr.phrase, |r| draw(r));
    let explicit: &[&str] = if attr.is_person {
        &[
            "Who is my {attr}?",
            "Remind me, who is my {attr}?",
            "Who is my {attr} at the moment?",
            "Quick question: who is my {attr}?",
        ]
    } else {
        &[
            "What is my {attr}?",
            "What's my {attr} again?",
            "Remind me, what is my {attr}?",
            "Quick question: what is my {attr}?",
            "Sorry, what is my {attr}? I keep forgetting.",
        ]
    };
    let paraphrases = &[
        "I forgot the {attr} listed on my profile.",
        "Pull up the {attr} you have on file for me.",
        "Need my {attr}, please.",
        "Look up my {attr} for me.",
        "Remind me of my {attr}.",
    ];
    let text = cx.question(explicit, paraphrases, &[("attr", attr.phrase)]);
    let mut inst = Instance {
        text,
        answer: slot.current_value.clone(),
        answer_items: vec![(StoreId::Summary, fill(attr.summary, &[("v", &slot.current_value)]))],
        distractor_items: vec![],
    };
    if cx.distractor {
        let (k, when, _) = cx.session();
        let old = slot.historical_value.as_deref().expect("historical value");
        inst.distractor_items.push((
            StoreId::LongTerm,
            fill(
                "Session {k} ({when}): User said their {attr} was {old} at that point.",
                &[("k", &k), ("when", &when), ("attr", attr.phrase), ("old", old)],
            ),
        ));
    }
    inst
}

fn single_session<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    match cx.rng.gen_range(0..3) {
        0 => {
            let time = time_of_day(cx.rng);
            let team = pick(cx.rng, TEAMS);
            let text = cx.question(
                &[
                    "What time is the meeting I just mentioned?",
                    "When is my meeting with the {team} today?",
                    "What time is the meeting with the {team} today?",
                ],
                &[
                    "Remind me when the {team} meeting I brought up a moment ago starts.",
                    "When does that {team} sync start?",
                    "What time is the {team} sync I mentioned right now?",
                ],
                &[("team", team)],
            );
            Instance {
                text,
                answer: time.clone(),
                answer_items: vec![(
                    StoreId::ShortTerm,
                    fill(
                        "User just mentioned they have a meeting at {time} today with the {team}.",
                        &[("time", &time), ("team", team)],
                    ),
                )],
                distractor_items: vec![],
            }
        }
        1 => {
            let place = pick(cx.rng, RESTAURANTS);
            let text = cx.question(
                &[
                    "Which restaurant is dinner at tonight, the one I just mentioned?",
                    "Where are we having dinner today?",
                    "In this conversation, which restaurant did I pick for dinner?",
                ],
                &[
                    "What's the dinner spot I named a moment ago?",
                    "Which restaurant is booked for tonight?",
                    "Where is dinner going to be?",
                ],
                &[],
            );
            Instance {
                text,
                answer: place.to_string(),
                answer_items: vec![(
                    StoreId::ShortTerm,
                    fill(
                        "User said a moment ago that dinner tonight is booked at {place}.",
                        &[("place", place)],
                    ),
                )],
                distractor_items: vec![],
            }
        }
        _ => {
            let code = flight(cx.rng);
            let text = cx.question(
                &[
                    "What was the flight number I just said?",
                    "Which flight number have I just mentioned?",
                    "What flight am I on today?",
                ],
                &[
                    "Repeat the flight number from my latest message.",
                    "Which flight is it, the one from a moment ago?",
                    "What flight number should I write down?",
                ],
                &[],
            );
            Instance {
                text,
                answer: code.clone(),
                answer_items: vec![(
                    StoreId::ShortTerm,
                    fill("User just said their flight number is {code}.", &[("code", &code)]),
                )],
                distractor_items: vec![],
            }
        }
    }
}

fn recent_session<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    let topic = pick(cx.rng, TOPICS);
    let (k, when, _) = cx.session();
    let text = cx.question(
        &[
            "What did we talk about {when}?",
            "Which topic did we discuss {when}?",
            "What was our conversation about {when}?",
            "Remind me what we covered {when}.",
            "What did I ask you about {when}?",
        ],
        &[
            "Give me a recap of the session from {when}.",
            "Summarize the chat we had {when}.",
            "What's the gist of our session from {when}?",
        ],
        &[("when", &when)],
    );
    Instance {
        text,
        answer: topic.to_string(),
        answer_items: vec![(
            StoreId::LongTerm,
            fill(
                "Session {k} ({when}): User and assistant discussed {topic}.",
                &[("k", &k), ("when", &when), ("topic", topic)],
            ),
        )],
        distractor_items: vec![],
    }
}

fn multi_hop<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    let (k, when, _) = cx.session();
    if cx.rng.gen_bool(0.5) {
        let city = pick(cx.rng, CITIES);
        let text = cx.question(
            &[
                "Compare where I live with where my sister decided to move. Which city is it?",
                "How does my home city relate to the move my sister announced?",
                "Which city do both my profile and my sister's plans point to?",
            ],
            &[
                "Which city connects my profile and my sister's news?",
                "Is my sister moving to the city I live in? Which one?",
            ],
            &[],
        );
        Instance {
            text,
            answer: city.to_string(),
            answer_items: vec![
                (StoreId::Summary, fill("Profile: Lives in {city}.", &[("city", city)])),
                (
                    StoreId::LongTerm,
                    fill(
                        "Session {k} ({when}): User said their sister is moving to {city} as well.",
                        &[("k", &k), ("when", &when), ("city", city)],
                    ),
                ),
            ],
            distractor_items: vec![],
        }
    } else {
        let cuisine = pick(cx.rng, CUISINES);
        let text = cx.question(
            &[
                "How does my favorite cuisine relate to the anniversary dinner idea?",
                "Compare my food preferences with the anniversary plans we discussed.",
                "What cuisine links both my preferences and the anniversary plan I described?",
            ],
            &[
                "Which cuisine from my preferences fits the anniversary dinner idea?",
                "For the anniversary dinner, what food do I like most?",
            ],
            &[],
        );
        Instance {
            text,
            answer: cuisine.to_string(),
            answer_items: vec![
                (
                    StoreId::Summary,
                    fill("Preferences: Favorite cuisine is {c}.", &[("c", cuisine)]),
                ),
                (
                    StoreId::LongTerm,
                    fill(
                        "Session {k} ({when}): User asked for {c} restaurant ideas for their anniversary.",
                        &[("k", &k), ("when", &when), ("c", cuisine)],
                    ),
                ),
            ],
            distractor_items: vec![],
        }
    }
}

fn memory_capacity<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    let (k, when, turn) = cx.session();
    if cx.rng.gen_bool(0.5) {
        let books = listing(cx.rng, BOOKS, 3);
        let text = cx.question(
            &[
                "List all the books I mentioned reading this year.",
                "Can you list all the books I have read this year?",
                "How many books did I read this year, and which ones?",
                "Name every book I said I read this year.",
            ],
            &[
                "Repeat exactly which books I said I read this year, word for word.",
                "Quote the titles I named when we spoke about reading.",
                "Which novels have I gotten through this year?",
            ],
            &[],
        );
        Instance {
            text,
            answer: books.clone(),
            answer_items: vec![
                (
                    StoreId::LongTerm,
                    fill(
                        "Session {k} ({when}): User listed the books they read this year: {b}.",
                        &[("k", &k), ("when", &when), ("b", &books)],
                    ),
                ),
                (
                    StoreId::Episodic,
                    fill(
                        "Session {k}, Turn {t}: User said 'This year I read {b}.'",
                        &[("k", &k), ("t", &turn), ("b", &books)],
                    ),
                ),
            ],
            distractor_items: vec![],
        }
    } else {
        let stops = listing(cx.rng, CITIES, 3);
        let text = cx.question(
            &[
                "List all the cities I visited on the trip.",
                "Which were all the cities on my trip?",
                "How many cities did I stop in on the trip, and which?",
                "Name every city from my trip.",
            ],
            &[
                "Quote exactly the stops I said we made on the trip.",
                "What was the route of my trip, stop by stop?",
                "Where did the trip take me?",
            ],
            &[],
        );
        Instance {
            text,
            answer: stops.clone(),
            answer_items: vec![
                (
                    StoreId::LongTerm,
                    fill(
                        "Session {k} ({when}): User recapped their trip through {s}.",
                        &[("k", &k), ("when", &when), ("s", &stops)],
                    ),
                ),
                (
                    StoreId::Episodic,
                    fill(
                        "Session {k}, Turn {t}: User said 'On the trip we stopped in {s}.'",
                        &[("k", &k), ("t", &turn), ("s", &stops)],
                    ),
                ),
            ],
            distractor_items: vec![],
        }
    }
}

fn temporal<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    let (k, when, turn) = cx.session();
    if cx.rng.gen_bool(0.5) {
        let weight = format!("{} pounds", cx.rng.gen_range(150..=230));
        let goal = (cx.rng.gen_range(130..150)).to_string();
        let text = cx.question(
            &[
                "What was my weight before I started the diet?",
                "What did I weigh back when the diet began?",
                "What did my weight used to be, pre-diet?",
                "What was my previous weight, prior to the diet?",
                "How has my weight changed since the diet? What was it at the start?",
            ],
            &[
                "Quote exactly what I said about my starting weight.",
                "Remind me of my weight at the start of the diet.",
                "What number did I give for my weight when the diet began?",
            ],
            &[],
        );
        Instance {
            text,
            answer: weight.clone(),
            answer_items: vec![
                (
                    StoreId::LongTerm,
                    fill(
                        "Session {k} ({when}): User mentioned weight was {w} before starting a diet.",
                        &[("k", &k), ("when", &when), ("w", &weight)],
                    ),
                ),
                (
                    StoreId::Episodic,
                    fill(
                        "Session {k}, Turn {t}: User said 'Back in January I was {w}. With the diet I started, I'm hoping to get down to {g} by summer.'",
                        &[("k", &k), ("t", &turn), ("w", &weight), ("g", &goal)],
                    ),
                ),
            ],
            distractor_items: vec![],
        }
    } else {
        let old = pick(cx.rng, COMPANIES);
        let text = cx.question(
            &[
                "Where did I work before my current job?",
                "Which company did I work for before this one?",
                "What was my previous employer?",
                "Back when I switched jobs, which company was I leaving?",
            ],
            &[
                "Quote exactly what I said about my old employer.",
                "Which company was I at until the switch?",
                "Who employed me until the job switch?",
            ],
            &[],
        );
        Instance {
            text,
            answer: old.to_string(),
            answer_items: vec![
                (
                    StoreId::LongTerm,
                    fill(
                        "Session {k} ({when}): User explained they spent four years at {old} until the job switch.",
                        &[("k", &k), ("when", &when), ("old", old)],
                    ),
                ),
                (
                    StoreId::Episodic,
                    fill(
                        "Session {k}, Turn {t}: User said 'I was at {old} for four years until the switch.'",
                        &[("k", &k), ("t", &turn), ("old", old)],
                    ),
                ),
            ],
            distractor_items: vec![],
        }
    }
}

fn knowledge_update<R: Rng>(cx: &mut Ctx<'_, R>) -> Instance {
    let (k, when, _) = cx.session();
    let (k2, when2, _) = cx.session();
    let (slot, summary, update, stale, explicit, paraphrases): (
        FactSlot,
        &str,
        &str,
        &str,
        &[&str],
        &[&str],
    ) = match cx.rng.gen_range(0..3) {
        0 => (
            slot_pair(cx.rng, "manager", |r| person(r)),
            "Manager: {new}.",
            "Session {k} ({when}): Before the recent reorg, user's manager was {old}. Now reports to {new}.",
            "Session {k} ({when}): User's manager is {old}.",
            &[
                "Who did my team get as manager after the reorg?",
                "After the reorg was announced, who manages my work?",
                "Who stepped in as my manager during the reorg?",
                "Since the reorg, who is the manager of my team?",
            ],
            &[
                "Who does the user report to these days?",
                "Who runs the team I am on, post-reorg?",
            ],
        ),
        1 => (
            slot_pair(cx.rng, "home city", |r| pick(r, CITIES).to_string()),
            "Profile: Lives in {new}.",
            "Session {k} ({when}): User moved from {old} to {new}.",
            "Session {k} ({when}): User lives in {old}.",
            &[
                "Which city is my home now that I moved?",
                "Where did I move my home to?",
                "Which city is my home at the moment?",
            ],
            &[
                "Where does the user live now?",
                "Which city should the assistant use as home now?",
            ],
        ),
        _ => (
            slot_pair(cx.rng, "job title", |r| pick(r, TITLES).to_string()),
            "Profile: Job title is {new}.",
            "Session {k} ({when}): User was promoted from {old} to {new}.",
            "Session {k} ({when}): User's job title is {old}.",
            &[
                "What title did I get on my badge after the promotion?",
                "Since I was promoted, how should my title read?",
                "What's the title I earned, as listed on my profile?",
            ],
            &[
                "What title does the user hold after the promotion?",
                "How should the new title read on the org chart?",
            ],
        ),
    };
    let text = cx.question(explicit, paraphrases, &[]);
    let new = slot.current_value.clone();
    let old = slot.historical_value.clone().expect("historical value");
    let mut inst = Instance {
        text,
        answer: new.clone(),
        answer_items: vec![
            (StoreId::Summary, fill(summary, &[("new", &new)])),
            (
                StoreId::LongTerm,
                fill(update, &[("k", &k), ("when", &when), ("old", &old), ("new", &new)]),
            ),
        ],
        distractor_items: vec![],
    };
    if cx.distractor {
        inst.distractor_items.push((
            StoreId::LongTerm,
            fill(stale, &[("k", &k2), ("when", &when2), ("old", &old)]),
        ));
    }
    inst
}

const STM_FILLER: &[&str] = &[
    "User asked to keep replies short and friendly.",
    "User wants a reminder to stretch after long calls.",
    "User is drafting a note to the neighborhood association.",
    "Assistant suggested a packing checklist for the weekend.",
    "User prefers bullet points over long paragraphs right now.",
    "User asked for a quick overview of the news headlines.",
    "User is deciding between tea and coffee this afternoon.",
    "Assistant offered to draft a polite follow-up message.",
    "User asked for ideas about {hobby} for the weekend.",
    "User asked to schedule a follow-up call for tomorrow morning.",
    "User is looking for a {adjective} playlist for focused work.",
];
const SUMMARY_FILLER: &[&str] = &[
    "Preferences: Enjoys {hobby} on weekends.",
    "Preferences: Prefers window seats on long trips.",
    "Preferences: Likes {adjective} music while working.",
    "Profile: Speaks conversational French.",
    "Preferences: Takes coffee with oat milk.",
    "Profile: Volunteers at the community garden.",
    "Preferences: Favorite season is autumn.",
    "Preferences: Prefers email over phone calls for scheduling.",
    "Profile: Is training a puppy to walk on a leash.",
];
const LTM_FILLER: &[&str] = &[
    "Earlier session: User and assistant brainstormed {hobby} ideas.",
    "Earlier session: Assistant explained how to set up automatic backups.",
    "Earlier session: User asked for tips on sleeping better.",
    "Earlier session: User planned a {adjective} weekend with friends.",
    "Earlier session: Assistant reviewed a cover letter draft with the user.",
    "Earlier session: User wanted a recipe for a quick weeknight soup.",
    "Earlier session: User compared two budgeting apps with the assistant.",
];
const EPI_FILLER: &[&str] = &[
    "Turn: User said 'Thanks, that helps a lot.'",
    "Turn: Assistant said 'Here is a draft you can adapt.'",
    "Turn: User said 'Could you make that a bit shorter?'",
    "Turn: User said 'I will think about {hobby} some more.'",
    "Turn: Assistant said 'Happy to help with anything else.'",
    "Turn: User said 'That sounds {adjective}, let us keep it.'",
    "Turn: User said 'Can we circle back to this later?'",
];
const HOBBIES: &[&str] = &[
    "sourdough baking", "birdwatching", "watercolor painting", "indoor climbing", "chess openings",
    "pottery", "trail running",
];
const ADJECTIVES: &[&str] = &["calm", "upbeat", "cozy", "relaxed", "lively", "quiet"];

/// One background sentence for `store`.
pub fn filler_sentence<R: Rng>(store: StoreId, rng: &mut R) -> String {
    let bank = match store {
        StoreId::ShortTerm => STM_FILLER,
        StoreId::Summary => SUMMARY_FILLER,
        StoreId::LongTerm => LTM_FILLER,
        StoreId::Episodic => EPI_FILLER,
    };
    let template = pick(rng, bank);
    let hobby = pick(rng, HOBBIES);
    let adjective = pick(rng, ADJECTIVES);
    fill(template, &[("hobby", hobby), ("adjective", adjective)])
}

/// Rejects an answer that also occurs in shared background content.
pub fn check_answer_not_in_filler(answer: &str, filler: &[String]) -> Result<()> {
    match filler.iter().find(|f| f.contains(answer)) {
        Some(f) => Err(Error::InvalidDataset(format!(
            "answer `{answer}` occurs in background item `{f}`"
        ))),
        None => Ok(()),
    }
}

/// Every template of a type, paired with whether it is a paraphrase. Used by
/// tests to check cue properties across whole banks.
#[cfg(test)]
pub fn all_questions(t: QueryType) -> Vec<(String, bool)> {
    use rand::SeedableRng;
    let mut out = Vec::new();
    for paraphrase in [false, true] {
        for seed in 0..400u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let inst = instantiate(t, &mut rng, paraphrase, false);
            if !out.iter().any(|(q, _)| q == &inst.text) {
                out.push((inst.text, paraphrase));
            }
        }
    }
    out
}
