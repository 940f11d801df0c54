//! Deterministic synthetic company generator.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CompanyFixture, EmployeeProfile, Meeting, MemberId, ModelError};
use crate::schedule::{is_acceptable, ClockTime, PreferenceRule, Pronoun, SlotUniverse};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub size: usize,
    pub company: String,
    pub meetings_per_size: usize,
    pub meeting_sizes: RangeInclusive<usize>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            size: 34,
            company: "MedAI Labs".into(),
            meetings_per_size: 40,
            meeting_sizes: 3..=5,
        }
    }
}

struct Department {
    roles: [&'static str; 4],
    duties: &'static [&'static str],
    subjects: &'static [&'static str],
}

const DEPARTMENTS: &[Department] = &[
    Department {
        roles: ["VP of Engineering", "Senior Software Engineer", "Software Engineer", "Junior Software Engineer"],
        duties: &[
            "Designing, developing, and testing software solutions for the company's products and services",
            "Troubleshooting and resolving software issues and bugs",
            "Mentoring and coaching junior software engineers and sharing best practices",
            "Reviewing code and maintaining engineering quality standards",
            "Planning sprints and estimating engineering work",
            "Maintaining the cloud infrastructure and deployment pipelines",
        ],
        subjects: &["AI feature update and feedback", "Sprint planning", "Architecture review", "Incident retrospective", "Release readiness check"],
    },
    Department {
        roles: ["Chief Medical Officer", "Senior Clinical Research Scientist", "Clinical Research Associate", "Clinical Data Coordinator"],
        duties: &[
            "Overseeing the clinical validation of the company's diagnostic models",
            "Designing and running clinical studies with partner hospitals",
            "Ensuring patient safety and ethical standards in all studies",
            "Collecting, cleaning, and curating clinical datasets",
            "Preparing clinical evidence for publications and regulators",
            "Advising product teams on medical workflows",
        ],
        subjects: &["Clinical study status", "Dataset curation review", "Partner hospital onboarding", "Model validation results"],
    },
    Department {
        roles: ["VP of Sales", "Sales Manager", "Sales Representative", "Sales Assistant"],
        duties: &[
            "Identifying and qualifying leads and prospects for the company's products and services",
            "Conducting sales presentations and demos to potential customers",
            "Following up and closing sales deals and ensuring customer satisfaction and retention",
            "Assisting the sales team in various tasks and projects",
            "Forecasting revenue and managing the sales pipeline",
            "Negotiating contracts with hospital procurement teams",
        ],
        subjects: &["Pipeline review", "Quarterly sales forecast", "Demo preparation", "Pricing discussion"],
    },
    Department {
        roles: ["Head of Customer Success", "Senior Customer Success Manager", "Customer Success Manager", "Customer Support Specialist"],
        duties: &[
            "Managing a portfolio of key accounts and ensuring they achieve their desired outcomes",
            "Providing proactive and reactive support, guidance, and training to customers",
            "Identifying and pursuing opportunities to upsell, cross-sell, and renew customers",
            "Handling customer tickets and escalations",
            "Collecting customer feedback for the product team",
            "Running onboarding sessions for new customers",
        ],
        subjects: &["Discuss Customer Success Efforts", "Customer escalation review", "Renewal strategy", "Onboarding feedback"],
    },
    Department {
        roles: ["Head of Product", "Senior Product Manager", "Product Manager", "Product Designer"],
        duties: &[
            "Defining the product roadmap and priorities",
            "Gathering requirements from customers and clinicians",
            "Writing product specifications and user stories",
            "Designing user interfaces and conducting usability tests",
            "Coordinating launches across teams",
            "Tracking product metrics and adoption",
        ],
        subjects: &["Roadmap planning", "Design review", "Launch coordination", "User research readout"],
    },
    Department {
        roles: ["Chief Operating Officer", "Finance Manager", "Operations Specialist", "Office Coordinator"],
        duties: &[
            "Managing the budget, payroll, and financial reporting",
            "Overseeing hiring, onboarding, and people operations",
            "Coordinating vendors, facilities, and office logistics",
            "Improving internal processes and tooling",
            "Preparing board materials and investor updates",
            "Handling legal and administrative paperwork",
        ],
        subjects: &["Budget review", "Hiring plan", "Board meeting preparation", "Office logistics"],
    },
    Department {
        roles: ["Head of Regulatory Affairs", "Regulatory Affairs Manager", "Quality Assurance Specialist", "Compliance Analyst"],
        duties: &[
            "Preparing regulatory submissions for medical device approval",
            "Maintaining the quality management system",
            "Auditing processes for compliance with health regulations",
            "Tracking changes in medical data privacy laws",
            "Documenting risk analyses for product releases",
            "Training staff on compliance procedures",
        ],
        subjects: &["Regulatory submission planning", "Quality audit follow-up", "Compliance training", "Risk analysis review"],
    },
    Department {
        roles: ["Head of Marketing", "Marketing Manager", "Content Specialist", "Marketing Assistant"],
        duties: &[
            "Developing the brand and go-to-market strategy",
            "Planning campaigns and events for healthcare audiences",
            "Writing blog posts, case studies, and white papers",
            "Managing social media and the company website",
            "Measuring campaign performance and lead generation",
            "Supporting the sales team with collateral",
        ],
        subjects: &["Campaign kickoff", "Conference planning", "Case study review", "Website refresh"],
    },
];

const CEO_DUTIES: &[&str] = &[
    "Setting the vision, mission, and values of the company",
    "Leading the overall strategy and execution of the company's initiatives",
    "Managing the financial, legal, and operational aspects of the company",
];

const CEO_SUBJECTS: &[&str] = &["Company strategy offsite planning", "Leadership sync", "Investor update"];

/// Builds a company with the default layout: `size` employees and 40
/// meetings of each size 3, 4 and 5.
pub fn generate_company(seed: u64, size: usize) -> Result<CompanyFixture, ModelError> {
    generate_with(
        seed,
        &GeneratorConfig {
            size,
            ..GeneratorConfig::default()
        },
    )
}

pub fn generate_with(seed: u64, config: &GeneratorConfig) -> Result<CompanyFixture, ModelError> {
    if config.size < 3 {
        return Err(ModelError::CompanyTooSmall(config.size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut employees = Vec::with_capacity(config.size);
    // department index per employee; None for the CEO
    let mut dept_of: Vec<Option<usize>> = Vec::with_capacity(config.size);

    employees.push(profile(
        &mut rng,
        1,
        "CEO",
        None,
        5,
        CEO_DUTIES.iter().map(|s| s.to_string()).collect(),
    ));
    dept_of.push(None);

    let rest = config.size - 1;
    let n_heads = rest.div_ceil(5).clamp(1, DEPARTMENTS.len()).min(rest);
    let mut order: Vec<usize> = (0..DEPARTMENTS.len()).collect();
    order.shuffle(&mut rng);
    let depts: Vec<usize> = order.into_iter().take(n_heads).collect();

    // (head index, senior index) per department
    let mut leads: Vec<(usize, Option<usize>)> = Vec::new();
    for &d in &depts {
        let idx = employees.len();
        let duties = pick_duties(&mut rng, DEPARTMENTS[d].duties);
        employees.push(profile(
            &mut rng,
            idx + 1,
            DEPARTMENTS[d].roles[0],
            Some(employees[0].name.clone()),
            4,
            duties,
        ));
        dept_of.push(Some(d));
        leads.push((idx, None));
    }

    let mut fill = vec![0usize; depts.len()];
    while employees.len() < config.size {
        let slot = rng.gen_range(0..depts.len());
        let d = depts[slot];
        let k = fill[slot];
        fill[slot] += 1;
        let (head, senior) = leads[slot];
        let (role, level, manager) = match k {
            0 => (DEPARTMENTS[d].roles[1], 3, head),
            k if k % 2 == 1 => (DEPARTMENTS[d].roles[2], 2, head),
            _ => (DEPARTMENTS[d].roles[3], 1, senior.unwrap_or(head)),
        };
        let idx = employees.len();
        let duties = pick_duties(&mut rng, DEPARTMENTS[d].duties);
        employees.push(profile(
            &mut rng,
            idx + 1,
            role,
            Some(employees[manager].name.clone()),
            level,
            duties,
        ));
        dept_of.push(Some(d));
        if k == 0 {
            leads[slot].1 = Some(idx);
        }
    }

    let mut meetings = Vec::new();
    for n in config.meeting_sizes.clone() {
        meetings.extend(meetings_of_size(&mut rng, &employees, &dept_of, n, config.meetings_per_size));
    }

    let fixture = CompanyFixture {
        company: config.company.clone(),
        seed,
        employees,
        meetings,
    };
    fixture.validate()?;
    Ok(fixture)
}

/// Extra meetings of exactly `n` members, e.g. to top up a scenario pool.
pub fn generate_meetings(seed: u64, fixture: &CompanyFixture, n: usize, count: usize) -> Vec<Meeting> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Department membership is recovered from role names.
    let dept_of: Vec<Option<usize>> = fixture
        .employees
        .iter()
        .map(|e| DEPARTMENTS.iter().position(|d| d.roles.contains(&e.role.as_str())))
        .collect();
    meetings_of_size(&mut rng, &fixture.employees, &dept_of, n, count)
}

fn meetings_of_size(
    rng: &mut ChaCha8Rng,
    employees: &[EmployeeProfile],
    dept_of: &[Option<usize>],
    n: usize,
    count: usize,
) -> Vec<Meeting> {
    let total = employees.len();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let organizer = rng.gen_range(0..total);
        let allow_organizer = n > total - 1;
        let neighborhood: Vec<usize> = (0..total)
            .filter(|&i| i != organizer)
            .filter(|&i| {
                let same_dept = dept_of[i].is_some() && dept_of[i] == dept_of[organizer];
                let reports = employees[i].manager.as_ref() == Some(&employees[organizer].name);
                let boss = employees[organizer].manager.as_ref() == Some(&employees[i].name);
                same_dept || reports || boss
            })
            .collect();
        let mut picked: BTreeSet<usize> = BTreeSet::new();
        if allow_organizer {
            picked.insert(organizer);
        }
        while picked.len() < n.min(total) {
            let free_near: Vec<usize> = neighborhood.iter().copied().filter(|i| !picked.contains(i)).collect();
            let candidate = if !free_near.is_empty() && rng.gen_bool(0.6) {
                free_near[rng.gen_range(0..free_near.len())]
            } else {
                rng.gen_range(0..total)
            };
            if candidate != organizer || allow_organizer {
                picked.insert(candidate);
            }
        }
        let subjects = match dept_of[organizer] {
            Some(d) => DEPARTMENTS[d].subjects,
            None => CEO_SUBJECTS,
        };
        let subject = subjects[rng.gen_range(0..subjects.len())].to_string();
        out.push(Meeting {
            organizer: employees[organizer].name.clone(),
            members: picked.into_iter().map(|i| employees[i].name.clone()).collect(),
            subject,
            date: random_weekday(rng),
            duration_minutes: if rng.gen_bool(0.8) { 30 } else { 60 },
        });
    }
    out
}

fn random_weekday(rng: &mut ChaCha8Rng) -> NaiveDate {
    loop {
        let day = rng.gen_range(1..=28);
        let date = NaiveDate::from_ymd_opt(2023, 2, day).expect("valid February date");
        if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            return date;
        }
    }
}

fn pick_duties(rng: &mut ChaCha8Rng, pool: &[&str]) -> Vec<String> {
    pool.choose_multiple(rng, 3).map(|s| s.to_string()).collect()
}

fn profile(
    rng: &mut ChaCha8Rng,
    number: usize,
    role: &str,
    manager: Option<MemberId>,
    level: u8,
    responsibilities: Vec<String>,
) -> EmployeeProfile {
    let pronoun = match rng.gen_range(0..10) {
        0 => Pronoun::They,
        1..=5 => Pronoun::She,
        _ => Pronoun::He,
    };
    let rules = preference_rules(rng);
    EmployeeProfile {
        name: MemberId(format!("Member {number}")),
        role: role.to_string(),
        manager,
        level,
        responsibilities,
        schedule_preferences: preference_text(rng, &rules, pronoun),
        preference_rules: rules,
        pronoun: Some(pronoun),
    }
}

fn preference_rules(rng: &mut ChaCha8Rng) -> Vec<PreferenceRule> {
    let primary = [
        PreferenceRule::Morning,
        PreferenceRule::Morning,
        PreferenceRule::Afternoon,
        PreferenceRule::Afternoon,
        PreferenceRule::LateAfternoon,
        PreferenceRule::NotBefore { time: ClockTime::hm(10, 0) },
        PreferenceRule::FinishBy { time: ClockTime::hm(16, 0) },
    ];
    let secondary = [
        PreferenceRule::AvoidLunch,
        PreferenceRule::NotBefore { time: ClockTime::hm(9, 0) },
        PreferenceRule::NotBefore { time: ClockTime::hm(9, 30) },
        PreferenceRule::FinishBy { time: ClockTime::hm(17, 0) },
    ];
    let notice = [3u16, 24, 48];
    // Any weekday works for the feasibility check; only times matter.
    let date = NaiveDate::from_ymd_opt(2023, 2, 15).expect("valid date");
    let invite = date.and_hms_opt(0, 0, 0).expect("valid time");
    loop {
        let mut rules = vec![primary[rng.gen_range(0..primary.len())]];
        if rng.gen_bool(0.5) {
            let extra = secondary[rng.gen_range(0..secondary.len())];
            if std::mem::discriminant(&extra) != std::mem::discriminant(&rules[0]) {
                rules.push(extra);
            }
        }
        if rng.gen_bool(0.6) {
            rules.push(PreferenceRule::MinNotice {
                hours: notice[rng.gen_range(0..notice.len())],
            });
        }
        let feasible = [30u16, 60].iter().all(|&d| {
            SlotUniverse::new(date, d)
                .slots()
                .iter()
                .filter(|s| is_acceptable(&rules, s, invite))
                .count()
                >= 2
        });
        if feasible {
            return rules;
        }
    }
}

fn preference_text(rng: &mut ChaCha8Rng, rules: &[PreferenceRule], pronoun: Pronoun) -> String {
    let p = pronoun.subject();
    let poss = pronoun.possessive();
    let plural = pronoun == Pronoun::They;
    let flavor = [
        format!("{p} {} flexible with {poss} availability.", if plural { "are" } else { "is" }),
        format!(
            "{p} {} a shared calendar to keep track of {poss} appointments and tasks.",
            if plural { "use" } else { "uses" }
        ),
        format!("{p} {} clear agendas.", if plural { "appreciate" } else { "appreciates" }),
        format!(
            "{p} {} focused time for {poss} own work between meetings.",
            if plural { "value" } else { "values" }
        ),
    ];
    let mut sentences: Vec<String> = rules.iter().map(|r| r.describe(pronoun)).collect();
    let n_flavor = rng.gen_range(1..=2);
    sentences.extend(flavor.choose_multiple(rng, n_flavor).cloned());
    sentences.join(" ")
}
