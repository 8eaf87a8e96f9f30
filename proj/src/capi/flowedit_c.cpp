#include "flowedit/flowedit.h"

#include <chrono>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "flowedit/config.hpp"
#include "flowedit/error.hpp"
#include "flowedit/experiment.hpp"
#include "flowedit/metrics.hpp"
#include "flowedit/mock_scorer.hpp"
#include "flowedit/scorer_client.hpp"

struct fe_config {
  flowedit::RunConfig value;
};

struct fe_text {
  std::string value;
};

struct fe_mock_scorer {
  std::unique_ptr<flowedit::MockScorer> server;
};

namespace {

thread_local std::string last_error;

template <typename F>
fe_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return FE_OK;
  } catch (const flowedit::Error& e) {
    last_error = e.what();
    return static_cast<fe_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return FE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FE_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return FE_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  flowedit::require(p != nullptr, flowedit::ErrorCode::invalid_argument, std::string(what) + " is null");
}

fe_text* make_text(std::string s) { return new fe_text{std::move(s)}; }

fe_score to_c(const flowedit::RewardScore& s) { return {s.alignment, s.coherence, s.consistency}; }

}  // namespace

extern "C" {

FE_API uint32_t fe_abi_version(void) { return FE_ABI_VERSION; }

FE_API const char* fe_status_name(fe_status status) {
  switch (status) {
    case FE_OK: return "ok";
    case FE_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case FE_ERR_SHAPE_MISMATCH: return "shape-mismatch";
    case FE_ERR_NON_FINITE: return "non-finite";
    case FE_ERR_DEGENERATE: return "degenerate";
    case FE_ERR_IO: return "io";
    case FE_ERR_VERSION_MISMATCH: return "version-mismatch";
    case FE_ERR_PROTOCOL: return "protocol";
    case FE_ERR_OUT_OF_RANGE: return "out-of-range";
    case FE_ERR_TIMEOUT: return "timeout";
    case FE_ERR_CONNECTION: return "connection";
    case FE_ERR_CONFIG: return "config";
    case FE_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

FE_API const char* fe_last_error(void) { return last_error.c_str(); }

FE_API fe_status fe_config_new(fe_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new fe_config{};
  });
}

FE_API fe_status fe_config_load(const char* path, fe_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new fe_config{flowedit::load_config(path)};
  });
}

FE_API fe_status fe_config_parse(const char* json, fe_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new fe_config{flowedit::RunConfig::from_json(json)};
  });
}

FE_API fe_status fe_config_set(fe_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->value.set(key, value);
  });
}

FE_API fe_status fe_config_validate(const fe_config* config) {
  return guarded([&] {
    need(config, "config");
    config->value.validate();
  });
}

FE_API fe_status fe_config_json(const fe_config* config, fe_text** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = make_text(config->value.to_json());
  });
}

FE_API fe_status fe_config_output_dir(const fe_config* config, fe_text** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = make_text(config->value.output_dir);
  });
}

FE_API fe_status fe_config_checkpoint(const fe_config* config, fe_text** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = make_text(config->value.checkpoint);
  });
}

FE_API void fe_config_free(fe_config* config) { delete config; }

FE_API const char* fe_text_data(const fe_text* text) { return text ? text->value.c_str() : ""; }
FE_API size_t fe_text_size(const fe_text* text) { return text ? text->value.size() : 0; }
FE_API void fe_text_free(fe_text* text) { delete text; }

FE_API fe_status fe_pretrain(const fe_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    flowedit::run_pretrain(config->value, out_dir);
  });
}

FE_API fe_status fe_train(const fe_config* config, const char* algo, const char* checkpoint, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(algo, "algo");
    need(checkpoint, "checkpoint");
    need(out_dir, "out_dir");
    flowedit::run_train(config->value, flowedit::parse_algorithm(algo), checkpoint, out_dir);
  });
}

FE_API fe_status fe_eval(const fe_config* config, const char* checkpoint, fe_text** report) {
  return guarded([&] {
    need(config, "config");
    need(checkpoint, "checkpoint");
    need(report, "report");
    *report = make_text(flowedit::run_eval(config->value, checkpoint).to_json());
  });
}

FE_API fe_status fe_probe_attention(const fe_config* config, const char* checkpoint, int code, fe_text** csv) {
  return guarded([&] {
    need(config, "config");
    need(checkpoint, "checkpoint");
    need(csv, "csv");
    *csv = make_text(flowedit::run_probe(config->value, checkpoint, code));
  });
}

FE_API fe_status fe_export_curves(const char* const* run_dirs, size_t count, const char* out_path) {
  return guarded([&] {
    need(run_dirs, "run_dirs");
    need(out_path, "out_path");
    std::vector<std::filesystem::path> dirs;
    for (size_t i = 0; i < count; ++i) {
      need(run_dirs[i], "run directory");
      dirs.emplace_back(run_dirs[i]);
    }
    flowedit::export_curves(dirs, out_path);
  });
}

FE_API fe_status fe_analytic_score(double source_x, double source_y, double edited_x, double edited_y, int code,
                                   fe_score* out) {
  return guarded([&] {
    need(out, "out");
    flowedit::require(flowedit::valid_code(code), flowedit::ErrorCode::invalid_argument, "unknown instruction code");
    *out = to_c(flowedit::analytic_score({edited_x, edited_y}, {source_x, source_y}, code));
  });
}

FE_API fe_status fe_remote_score(const char* endpoint, int timeout_ms, double source_x, double source_y,
                                 double edited_x, double edited_y, int code, fe_score* out) {
  return guarded([&] {
    need(endpoint, "endpoint");
    need(out, "out");
    flowedit::RemoteScorerOptions options;
    options.endpoint = flowedit::parse_endpoint(endpoint);
    if (timeout_ms > 0) options.timeout = std::chrono::milliseconds(timeout_ms);
    flowedit::RemoteScorer client(options);
    *out = to_c(client.score({edited_x, edited_y}, {source_x, source_y}, code));
  });
}

FE_API fe_status fe_mock_scorer_start(const char* listen, uint64_t seed, const char* fault, fe_mock_scorer** out) {
  return guarded([&] {
    need(listen, "listen");
    need(out, "out");
    flowedit::MockScorerOptions options;
    options.listen = flowedit::parse_endpoint(listen);
    options.seed = seed;
    options.fault = flowedit::parse_fault(fault ? fault : "none");
    auto handle = std::make_unique<fe_mock_scorer>();
    handle->server = std::make_unique<flowedit::MockScorer>(options);
    handle->server->start();
    *out = handle.release();
  });
}

FE_API uint16_t fe_mock_scorer_port(const fe_mock_scorer* server) {
  return server ? server->server->endpoint().port : 0;
}

FE_API fe_status fe_mock_scorer_wait(fe_mock_scorer* server) {
  return guarded([&] {
    need(server, "server");
    server->server->wait();
  });
}

FE_API void fe_mock_scorer_stop(fe_mock_scorer* server) {
  if (server) server->server->stop();
}

FE_API void fe_mock_scorer_free(fe_mock_scorer* server) { delete server; }

}  // extern "C"
