// Cascade interchange I/O plus construction from the two real-world sources:
// retweet-chain text and citation networks.
//
// Interchange file ("cascade-v1"): UTF-8, one JSON object per line after a
// "# cascade-v1" header comment. Keys are exactly cascade_id, window_t,
// nodes ([id, seconds] pairs), edges ([src, dst] pairs) and an optional
// non-negative integer label. Serialization is canonical: fixed key order,
// compact separators, integral numbers written without a fraction.
#pragma once

#include "casgcn/cascade.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace casgcn::io {

std::vector<LabeledCascade> read_cascades(std::istream& in, const std::string& source_name);
std::vector<LabeledCascade> read_cascades(const std::string& path);
void write_cascades(const std::vector<LabeledCascade>& cascades, std::ostream& out);
void write_cascades(const std::vector<LabeledCascade>& cascades, const std::string& path);

// One retweet event. The chain lists intermediate users nearest hop first,
// exactly as written left to right in "//@B//@A".
struct WeiboRecord {
  NodeId author;
  double timestamp{};  // seconds since the origin post
  std::vector<NodeId> chain;
};

struct WeiboParseResult {
  CascadeGraph graph;
  std::vector<std::string> notes;  // dropped duplicates, one entry each
};

// Builds the diffusion graph implied by the chains: for a record by C with
// chain [B, A], information flowed origin -> A -> B -> C. Records after
// window_t are ignored. Chain users without a record of their own get the
// earliest timestamp of any record mentioning them. Duplicate retweets by
// one author keep the earliest record and are reported in notes.
// Throws std::invalid_argument if the resulting graph does not validate.
WeiboParseResult parse_weibo_cascade(const NodeId& origin_author, double origin_time,
                                     std::vector<WeiboRecord> records, double window_t);

// Observed graph at window t plus the growth label over (t, t + delta_t].
LabeledCascade parse_weibo_labeled(const NodeId& origin_author, double origin_time,
                                   const std::vector<WeiboRecord>& records, double t,
                                   double delta_t, std::vector<std::string>* notes = nullptr);

// "" -> {}, "//@B//@A" -> {B, A}. Text after the first ':' is ignored.
std::vector<NodeId> parse_chain_text(const std::string& text);

struct CitationRecord {
  NodeId paper;
  int year{};
  std::vector<NodeId> references;
};

// Whole years to seconds; one constant so the two source pipelines share the
// temporal machinery.
inline constexpr double kSecondsPerYear = 365.0 * 86400.0;

// Cascade rooted at `target`: citers within t_years become nodes, edges run
// cited -> citing (target -> citer, and between observed citers), node times
// are publication-year gaps in seconds, and the label counts citers arriving
// in (t_years, t_years + delta_t_years].
LabeledCascade build_citation_cascade(const NodeId& target,
                                      const std::vector<CitationRecord>& corpus, int t_years,
                                      int delta_t_years);

// Weibo source: "author<TAB>relative_seconds<TAB>chain_text" lines; the
// origin post is the line with relative_seconds 0 and an empty chain.
struct WeiboSource {
  NodeId origin_author;
  std::vector<WeiboRecord> records;
};
WeiboSource read_weibo_source(std::istream& in, const std::string& source_name);
WeiboSource read_weibo_source(const std::string& path);

// Citation source: "paper_id<TAB>year<TAB>ref1,ref2,..." lines.
std::vector<CitationRecord> read_citation_source(std::istream& in,
                                                 const std::string& source_name);
std::vector<CitationRecord> read_citation_source(const std::string& path);

}  // namespace casgcn::io
