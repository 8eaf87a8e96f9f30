#include "flowedit/scorer_protocol.hpp"

#include <cmath>
#include <json.hpp>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

using nlohmann::json;

json parse_line(std::string_view line) {
  json doc = json::parse(line.begin(), line.end(), nullptr, false);
  require(!doc.is_discarded() && doc.is_object(), ErrorCode::protocol,
          "malformed scorer message: '" + std::string(line.substr(0, 80)) + "'");
  return doc;
}

double number_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  require(it != doc.end() && it->is_number(), ErrorCode::protocol, std::string("missing numeric field '") + key + "'");
  return it->get<double>();
}

Point point_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  require(it != doc.end() && it->is_array() && it->size() == 2 && (*it)[0].is_number() && (*it)[1].is_number(),
          ErrorCode::protocol, std::string("field '") + key + "' must be a two-element number array");
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

}  // namespace

std::string encode_request(const ScoreRequest& request) {
  json doc = {{"source", {request.source.x, request.source.y}},
              {"edited", {request.edited.x, request.edited.y}},
              {"code", request.code}};
  return doc.dump() + "\n";
}

ScoreRequest decode_request(std::string_view line) {
  json doc = parse_line(line);
  ScoreRequest req;
  req.source = point_field(doc, "source");
  req.edited = point_field(doc, "edited");
  auto it = doc.find("code");
  require(it != doc.end() && it->is_number_integer(), ErrorCode::protocol, "missing integer field 'code'");
  req.code = it->get<int>();
  require(valid_code(req.code), ErrorCode::protocol, "request code out of range");
  return req;
}

std::string encode_response(const RewardScore& score) {
  json doc = {{"alignment", score.alignment}, {"coherence", score.coherence}, {"consistency", score.consistency}};
  return doc.dump() + "\n";
}

RewardScore decode_response(std::string_view line) {
  json doc = parse_line(line);
  const RewardScore score{number_field(doc, "alignment"), number_field(doc, "coherence"),
                          number_field(doc, "consistency")};
  for (double v : {score.alignment, score.coherence, score.consistency})
    require(std::isfinite(v) && v >= 0.0 && v <= kMaxComponentScore, ErrorCode::out_of_range,
            "scorer returned component outside [0, 5]: " + std::to_string(v));
  return score;
}

}  // namespace flowedit
