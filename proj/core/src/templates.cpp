#include "copypaste/templates.hpp"

#include <fstream>
#include <sstream>

#include "copypaste/error.hpp"
#include "copypaste/text_util.hpp"

namespace copypaste {

namespace {

constexpr const char* kExtractText =
    R"(Instruction: Please carefully read the Context and extract ALL relevant complete sentences that could help answer the Query. Output each extracted sentence on a separate line, preceded by "EXTRACTED: ".

Context

{context}

Query

{query}

CRITICAL REQUIREMENTS

1. You MUST extract complete sentences EXACTLY as they appear in the Context.
2. NO modifications, paraphrasing, or combining of sentences allowed.
3. Each extracted sentence must be highly relevant to the Query.
4. Extract ALL sentences that could help answer the Query (err on the side of inclusion).
5. Preserve all terminology, measurements, and symbols exactly as written.

Output Format

EXTRACTED: [First complete sentence exactly as it appears in Context]
EXTRACTED: [Second complete sentence exactly as it appears in Context]
...

Your extraction:)";

constexpr const char* kOrderText =
    R"(Instruction: Given the Query and a list of Copied Sentences, please determine the optimal order for these sentences to create the most logical, coherent, and helpful response.

Query

{query}

Copied Sentences

{numbered_sentences}

Important Requirements

- Only use the sentence IDs provided above
- Include ALL sentences in your ordering
- Consider the query context when determining the most logical flow

Output Format

Output the optimal order as a comma-separated list of sentence IDs as below, do not provide any other information.

ORDER: [comma-separated list of sentence IDs, e.g., SENT_2,SENT_1,SENT_3])";

constexpr const char* kLinkText =
    R"(Instruction: You are a professional text organization expert. Generate concise transition sentences to connect the core sentences and make the response flow naturally.

Query
{query}

Core Sentences
{numbered_sentences}

Requirements

1. Transition sentences should be concise (no more than 15 words)
2. They should logically connect adjacent core sentences
3. Focus on creating smooth flow between ideas
4. Common types: progression, contrast, addition, conclusion

Output Format

[TRANSITION_1_2]transition sentence content[/TRANSITION_1_2]
[TRANSITION_2_3]transition sentence content[/TRANSITION_2_3]
...

Optionally add:

[INTRO]introduction sentence[/INTRO]
[CONCLUSION]conclusion sentence[/CONCLUSION]

Please generate transitions:)";

constexpr const char* kCopyingRequirementsText =
    R"(1. RELEVANT CONTEXT REUSE: Incorporate relevant text.
2. MINIMAL ORIGINAL CONTENT: Limit additions to essential connections only.
3. PRESERVE EXACT WORDING: Keep original phrases and expressions.
4. CONTEXT-ONLY INFORMATION: Use only facts explicitly in the context, do not make up any information.
5. KEEP FLUENT and NATURAL ENGLISH.)";

constexpr const char* kWriterText =
    R"(Instruction: You are writer, skilled at copying relevant content from context to answer user questions. Generate highly copying responses from the given context.

Query

{query}

Context

{context}

Copying Requirements

{copying_requirements}

Answer:)";

constexpr const char* kWriterReviseText =
    R"(Instruction: You are Writer, skilled at copying relevant content from context to answer user questions. The Reviewer has suggested revisions to your old answer. Please provide a better answer to improve copying score and query relevance.

Your previous answer and Reviewer's suggestions

Old Answer

{old_answer}

Reviewer's Suggestions

{reviewer_suggestions}

Context

{context}

Query

{query}

Copying Requirements

{copying_requirements}

Answer:)";

constexpr const char* kReviewerText =
    R"(Your task is to review the answer to the query and suggest revisions with the goal of improving the answer's copying score (contextual faithfulness) and query relevance.

Context

{context}

Query

{query}

Answer Awaiting Review

{answer}

Review Criteria

- Copying Score: Text reuse from context (Current: {copying_score})
  - If copying score <= {copying_threshold}, require more context incorporation
- Contextual Faithfulness: All facts sourced from context only
  - Remove any facts or knowledge not in context
  - Reduce excessive or unnecessary original content
- Query Relevance: Direct addressing of user query

Provide CONCISE and ACTIONABLE suggestions (max 3 points):)";

constexpr const char* kAttributedText =
    R"(Instruction: Bear in mind that your answer should be strictly based on the following context.

Context: {context}

Query: {query}

Answer:)";

constexpr const char* kCitationsText =
    R"(Instruction: Bear in mind that your answer should be strictly based on the following numbered passages. Add citations in square brackets [1], [2, 3], etc. at the end of sentences that are supported by the evidence.

Numbered Sentences

{numbered_sentences}

Query

{query}

Answer:)";

constexpr const char* kJudgePairwiseText =
    R"(Instruction: You are an expert judge. Compare two RAG responses (Response A and Response B) {instruction}

Context: {context}

Response A: {response_a}

Response B: {response_b}

Please note: Do not question or doubt the provided context. Assume the context is absolutely correct, and make your verdict strictly based on this premise.

Output Format: {"verdict": "<A/B/TIE>"})";

constexpr const char* kJudgeTwistText =
    R"(for information distortion hallucination. The Core Definition of Information Twist: Altering key information in the Context (e.g., numbers, timelines, subjects, conclusions).

Which has fewer information distortion hallucinations?)";

constexpr const char* kJudgeCausalText =
    R"(for causal hallucination. The Core Definition of Causal: Forcibly linking unrelated content in the Context to form new conclusions unsupported by the Context.

Which has fewer false association hallucinations?)";

constexpr const char* kHitRateText =
    R"(Context:
{context}

Question: {question}

Based on the context, let's think step-by-step and answer the question in detail. Answer:)";

constexpr const char* kAccuracyText =
    R"(Context:
{context}

Question: {question}

Options:
{options}

Based on the above context, answer the question. You must output only a single token: A, B C or D. Do not provide any explanation or reasoning, just the chosen option. Answer:)";

}  // namespace

TemplateSet::TemplateSet() {
  templates_.emplace(tmpl::kExtract, kExtractText);
  templates_.emplace(tmpl::kOrder, kOrderText);
  templates_.emplace(tmpl::kLink, kLinkText);
  templates_.emplace(tmpl::kCopyingRequirements, kCopyingRequirementsText);
  templates_.emplace(tmpl::kWriter, kWriterText);
  templates_.emplace(tmpl::kWriterRevise, kWriterReviseText);
  templates_.emplace(tmpl::kReviewer, kReviewerText);
  templates_.emplace(tmpl::kBase, "{query}");
  templates_.emplace(tmpl::kAttributed, kAttributedText);
  templates_.emplace(tmpl::kCitations, kCitationsText);
  templates_.emplace(tmpl::kJudgePairwise, kJudgePairwiseText);
  templates_.emplace(tmpl::kJudgeTwist, kJudgeTwistText);
  templates_.emplace(tmpl::kJudgeCausal, kJudgeCausalText);
  templates_.emplace(tmpl::kHitRate, kHitRateText);
  templates_.emplace(tmpl::kAccuracy, kAccuracyText);
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kConfig, "template directory does not exist: " + dir.string());
  }
  TemplateSet set;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    set.set(entry.path().stem().string(), std::move(text));
  }
  return set;
}

const std::string& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw Error(ErrorKind::kConfig, "unknown prompt template: " + std::string(name));
  }
  return it->second;
}

std::string TemplateSet::render(
    std::string_view name, const std::vector<std::pair<std::string, std::string>>& values) const {
  return render_template(get(name), values);
}

void TemplateSet::set(std::string name, std::string text) {
  templates_[std::move(name)] = std::move(text);
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : templates_) out.push_back(k);
  return out;
}

}  // namespace copypaste
