#include <adaf2m2/adaf2m2.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <ostream>
#include <streambuf>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "runner.hpp"

struct adaf2m2_config {
    nlohmann::json tree;
};

namespace {

thread_local std::string g_last_error;

// Echo lines cross the C boundary as a FILE*; this adapts it to the
// std::ostream the runner writes to.
class FileBuf : public std::streambuf {
public:
    explicit FileBuf(FILE* f) : f_(f) {}

protected:
    int overflow(int ch) override {
        if (ch == traits_type::eof()) return 0;
        return std::fputc(ch, f_) == EOF ? traits_type::eof() : ch;
    }
    std::streamsize xsputn(const char* s, std::streamsize n) override {
        return static_cast<std::streamsize>(
            std::fwrite(s, 1, static_cast<std::size_t>(n), f_));
    }

private:
    FILE* f_;
};

class DiscardBuf : public std::streambuf {
protected:
    int overflow(int ch) override { return ch == traits_type::eof() ? 0 : ch; }
    std::streamsize xsputn(const char*, std::streamsize n) override { return n; }
};

template <typename Fn>
adaf2m2_status guarded(Fn&& fn) {
    try {
        const adaf2m2_status st = fn();
        if (st == ADAF2M2_OK) g_last_error.clear();
        return st;
    } catch (const adaf2m2::ConfigError& e) {
        g_last_error = e.what();
        return ADAF2M2_ERR_CONFIG;
    } catch (const adaf2m2::IoError& e) {
        g_last_error = e.what();
        return ADAF2M2_ERR_IO;
    } catch (const adaf2m2::NumericError& e) {
        g_last_error = e.what();
        return ADAF2M2_ERR_NUMERIC;
    } catch (const adaf2m2::ShapeError& e) {
        g_last_error = e.what();
        return ADAF2M2_ERR_SHAPE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ADAF2M2_ERR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown error";
        return ADAF2M2_ERR_UNKNOWN;
    }
}

template <typename Fn>
adaf2m2_status run_command(const adaf2m2_config* cfg, FILE* echo, Fn&& fn) {
    if (!cfg) {
        g_last_error = "null config handle";
        return ADAF2M2_ERR_INVALID;
    }
    return guarded([&]() -> adaf2m2_status {
        if (echo) {
            FileBuf buf(echo);
            std::ostream os(&buf);
            return fn(cfg->tree, os);
        }
        DiscardBuf buf;
        std::ostream os(&buf);
        return fn(cfg->tree, os);
    });
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char* adaf2m2_version(void) { return "adaf2m2 1.0.0"; }

const char* adaf2m2_last_error(void) { return g_last_error.c_str(); }

adaf2m2_config* adaf2m2_config_new(void) {
    adaf2m2_config* cfg = nullptr;
    guarded([&]() -> adaf2m2_status {
        cfg = new adaf2m2_config{adaf2m2::config_defaults()};
        return ADAF2M2_OK;
    });
    return cfg;
}

adaf2m2_config* adaf2m2_config_load(const char* path) {
    if (!path) {
        g_last_error = "null config path";
        return nullptr;
    }
    adaf2m2_config* cfg = nullptr;
    const adaf2m2_status st = guarded([&]() -> adaf2m2_status {
        const std::string p(path);
        nlohmann::json tree = adaf2m2::resolve_config(p, {});
        cfg = new adaf2m2_config{std::move(tree)};
        return ADAF2M2_OK;
    });
    if (st != ADAF2M2_OK) {
        delete cfg;
        return nullptr;
    }
    return cfg;
}

adaf2m2_status adaf2m2_config_set(adaf2m2_config* cfg, const char* assignment) {
    if (!cfg || !assignment) {
        g_last_error = !cfg ? "null config handle" : "null assignment";
        return ADAF2M2_ERR_INVALID;
    }
    return guarded([&]() -> adaf2m2_status {
        adaf2m2::apply_override(cfg->tree, assignment);
        return ADAF2M2_OK;
    });
}

char* adaf2m2_config_dump(const adaf2m2_config* cfg) {
    if (!cfg) {
        g_last_error = "null config handle";
        return nullptr;
    }
    char* out = nullptr;
    guarded([&]() -> adaf2m2_status {
        out = copy_string(cfg->tree.dump(2));
        return ADAF2M2_OK;
    });
    return out;
}

void adaf2m2_config_free(adaf2m2_config* cfg) { delete cfg; }

adaf2m2_status adaf2m2_run_train(const adaf2m2_config* cfg, FILE* echo) {
    return run_command(cfg, echo, [](const nlohmann::json& tree, std::ostream& os) {
        adaf2m2::run_train(tree, os);
        return ADAF2M2_OK;
    });
}

adaf2m2_status adaf2m2_run_eval(const adaf2m2_config* cfg, FILE* echo) {
    return run_command(cfg, echo, [](const nlohmann::json& tree, std::ostream& os) {
        adaf2m2::run_eval(tree, os);
        return ADAF2M2_OK;
    });
}

adaf2m2_status adaf2m2_run_analyze(const adaf2m2_config* cfg, FILE* echo) {
    return run_command(cfg, echo, [](const nlohmann::json& tree, std::ostream& os) {
        adaf2m2::run_analyze(tree, os);
        return ADAF2M2_OK;
    });
}

adaf2m2_status adaf2m2_run_gradcheck(const adaf2m2_config* cfg, FILE* echo) {
    return run_command(cfg, echo, [](const nlohmann::json& tree, std::ostream& os) {
        if (!adaf2m2::run_gradcheck(tree, os)) {
            g_last_error = "gradient check failed; see the echoed report";
            return ADAF2M2_ERR_FAILED;
        }
        return ADAF2M2_OK;
    });
}

adaf2m2_status adaf2m2_run_gen_synth(const adaf2m2_config* cfg, FILE* echo) {
    return run_command(cfg, echo, [](const nlohmann::json& tree, std::ostream& os) {
        adaf2m2::run_gen_synth(tree, os);
        return ADAF2M2_OK;
    });
}

void adaf2m2_string_free(char* s) { std::free(s); }

} // extern "C"
