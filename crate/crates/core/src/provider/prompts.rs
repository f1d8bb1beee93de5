//! Prompt construction. The system templates live in `prompts/*.txt` and
//! each starts with a `[template:<purpose> v1]` marker line.

use super::{ChatMessage, CompletionRequest, Purpose};

const COMPLEXITY: &str = include_str!("../../prompts/complexity.txt");
const DECOMPOSE: &str = include_str!("../../prompts/decompose.txt");
const ROUTE: &str = include_str!("../../prompts/route.txt");
const SQL_GENERATE: &str = include_str!("../../prompts/sql_generate.txt");
const IR_ANSWER: &str = include_str!("../../prompts/ir_answer.txt");
const GENERAL_ANSWER: &str = include_str!("../../prompts/general_answer.txt");
const CAPTION: &str = include_str!("../../prompts/caption.txt");
const SYNTHESIZE: &str = include_str!("../../prompts/synthesize.txt");

pub fn template(purpose: Purpose) -> &'static str {
    match purpose {
        Purpose::Complexity => COMPLEXITY,
        Purpose::Decompose => DECOMPOSE,
        Purpose::Route => ROUTE,
        Purpose::SqlGenerate => SQL_GENERATE,
        Purpose::IrAnswer => IR_ANSWER,
        Purpose::GeneralAnswer => GENERAL_ANSWER,
        Purpose::Caption => CAPTION,
        Purpose::Synthesize => SYNTHESIZE,
    }
}

pub fn marker(purpose: Purpose) -> String {
    format!("[template:{} v1]", purpose.as_str())
}

fn max_tokens(purpose: Purpose) -> u32 {
    match purpose {
        Purpose::Complexity => 8,
        Purpose::Route => 16,
        Purpose::SqlGenerate => 256,
        Purpose::Synthesize => 1024,
        _ => 512,
    }
}

fn build(purpose: Purpose, subject: &str, user: String) -> CompletionRequest {
    CompletionRequest {
        messages: vec![
            ChatMessage::system(template(purpose).trim_end()),
            ChatMessage::user(user),
        ],
        purpose,
        max_tokens: max_tokens(purpose),
        temperature: if purpose.wants_zero_temperature() { 0.0 } else { 0.2 },
        subject: subject.to_string(),
    }
}

pub fn complexity(query: &str) -> CompletionRequest {
    build(Purpose::Complexity, query, format!("Query: {query}"))
}

pub fn decompose(query: &str) -> CompletionRequest {
    build(Purpose::Decompose, query, format!("Query: {query}"))
}

pub fn route(sub_question: &str) -> CompletionRequest {
    build(Purpose::Route, sub_question, format!("Question: {sub_question}"))
}

pub fn sql_generate(question: &str) -> CompletionRequest {
    build(Purpose::SqlGenerate, question, format!("Question: {question}"))
}

pub fn general_answer(question: &str) -> CompletionRequest {
    build(Purpose::GeneralAnswer, question, question.to_string())
}

/// `passages` are `(label, text)` pairs in rank order.
pub fn ir_answer(question: &str, passages: &[(String, String)]) -> CompletionRequest {
    let mut user = String::new();
    for (i, (label, text)) in passages.iter().enumerate() {
        user.push_str(&format!("{}. [{label}] {text}\n", i + 1));
    }
    user.push_str(&format!("\nQuestion: {question}"));
    build(Purpose::IrAnswer, question, user)
}

pub fn caption(question: &str) -> String {
    format!("{}\nQuestion: {question}", CAPTION.trim_end())
}

/// One synthesis input: the sub-question and either its answer or the
/// reason it is unavailable.
pub struct PartialInput<'a> {
    pub sub_question: &'a str,
    pub answer: Result<&'a str, String>,
}

pub fn synthesize(query: &str, partials: &[PartialInput<'_>]) -> CompletionRequest {
    let mut user = format!("Original query: {query}\n\n");
    for (i, p) in partials.iter().enumerate() {
        user.push_str(&format!("Sub-question {}: {}\n", i + 1, p.sub_question));
        match &p.answer {
            Ok(a) => user.push_str(&format!("Answer: {a}\n\n")),
            Err(reason) => user.push_str(&format!("Answer: unavailable ({reason})\n\n")),
        }
    }
    build(Purpose::Synthesize, query, user.trim_end().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_message_carries_marker() {
        let reqs = [
            complexity("q"),
            decompose("q"),
            route("q"),
            sql_generate("q"),
            general_answer("q"),
            ir_answer("q", &[("d#0".into(), "text".into())]),
            synthesize("q", &[]),
        ];
        for r in reqs {
            assert!(r.messages[0].content.starts_with(&marker(r.purpose)), "{}", r.purpose);
        }
        assert!(caption("what is this").starts_with(&marker(Purpose::Caption)));
    }

    #[test]
    fn mechanical_purposes_use_zero_temperature() {
        assert_eq!(route("q").temperature, 0.0);
        assert_eq!(complexity("q").temperature, 0.0);
        assert_eq!(sql_generate("q").temperature, 0.0);
        assert!(synthesize("q", &[]).temperature > 0.0);
    }

    #[test]
    fn synthesis_prompt_embeds_every_partial() {
        let r = synthesize(
            "Q",
            &[
                PartialInput { sub_question: "a?", answer: Ok("alpha") },
                PartialInput { sub_question: "b?", answer: Err("agent down".into()) },
            ],
        );
        let user = &r.messages[1].content;
        assert!(user.contains("Original query: Q"));
        assert!(user.contains("Answer: alpha"));
        assert!(user.contains("Answer: unavailable (agent down)"));
    }
}
