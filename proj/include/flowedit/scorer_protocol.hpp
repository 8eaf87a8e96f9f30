#pragma once

#include <string>
#include <string_view>

#include "flowedit/reward.hpp"

namespace flowedit {

// Newline-delimited JSON over a stream socket.
//   request:  {"source":[x,y],"edited":[x,y],"code":c}
//   response: {"alignment":a,"coherence":c,"consistency":s}
struct ScoreRequest {
  Point source;
  Point edited;
  int code = 0;
};

std::string encode_request(const ScoreRequest& request);
ScoreRequest decode_request(std::string_view line);

std::string encode_response(const RewardScore& score);
// Throws ErrorCode::protocol on malformed JSON or missing fields and
// ErrorCode::out_of_range when a component lies outside [0, 5].
RewardScore decode_response(std::string_view line);

}  // namespace flowedit
