#include "flowedit/scorer_client.hpp"

#include "flowedit/error.hpp"
#include "flowedit/scorer_protocol.hpp"

namespace flowedit {

RewardScore RemoteScorer::score(Point edited, const EditInstance& inst) {
  return score(edited, inst.source, inst.instruction.code);
}

RewardScore RemoteScorer::score(Point edited, Point source, int code) {
  const std::string request = encode_request({source, edited, code});
  std::string last_error;
  ErrorCode last_code = ErrorCode::connection;
  last_attempts_ = 0;
  for (int attempt = 0; attempt < options_.attempts; ++attempt) {
    ++last_attempts_;
    try {
      if (!socket_.valid()) socket_ = connect_tcp(options_.endpoint, options_.timeout);
      socket_.send_all(request);
      return decode_response(socket_.read_line(options_.timeout));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::timeout && e.code() != ErrorCode::connection) {
        socket_.close();
        throw;
      }
      last_error = e.what();
      last_code = e.code();
      socket_.close();
    }
  }
  fail(last_code, "scorer at " + options_.endpoint.str() + " failed after " + std::to_string(options_.attempts) +
                      " attempts: " + last_error);
}

}  // namespace flowedit
