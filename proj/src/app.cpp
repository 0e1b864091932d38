#include "market/app.hpp"

#include <fstream>
#include <sstream>

#include "market/error.hpp"

namespace market {
namespace {

std::string read_text(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read " + std::string(what) + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

App::App(Config config, AppOverrides o) : config_(std::move(config)) {
  if (o.store) {
    store_ = o.store;
  } else {
    owned_store_ = config_.data_dir.empty() ? std::unique_ptr<store::DocumentStore>(store::EmbeddedStore::in_memory())
                                            : store::EmbeddedStore::open(config_.data_dir);
    store_ = owned_store_.get();
  }
  if (o.clock) {
    clock_ = o.clock;
  } else {
    owned_clock_ = std::make_unique<SystemClock>();
    clock_ = owned_clock_.get();
  }
  if (o.random) {
    random_ = o.random;
  } else {
    owned_random_ = std::make_unique<OsRandom>();
    random_ = owned_random_.get();
  }
  if (o.mailer) {
    mailer_ = o.mailer;
  } else {
    auto log = config_.mail_capture_path;
    if (!log && !config_.data_dir.empty()) log = config_.data_dir / "mail.log";
    owned_mailer_ = std::make_unique<CaptureMailer>(log);
    mailer_ = owned_mailer_.get();
  }
  if (o.blacklist) {
    blacklist_ = o.blacklist;
  } else {
    owned_blacklist_ = std::make_unique<compliance::BlacklistConfig>(
        config_.blacklist_path.empty() ? compliance::BlacklistConfig{}
                                       : compliance::BlacklistConfig::load(config_.blacklist_path));
    blacklist_ = owned_blacklist_.get();
  }
  if (o.classifier) {
    classifier_ = o.classifier;
  } else {
    if (config_.classifier.mode != "mock") {
      throw Error(ErrorCode::ConfigInvalid, "classifier mode '" + config_.classifier.mode + "' is not available");
    }
    auto mock = std::make_unique<compliance::MockClassifier>();
    if (!config_.classifier.fixture_path.empty()) {
      try {
        compliance::register_fixtures(*mock, compliance::load_corpus(config_.classifier.fixture_path));
      } catch (const std::runtime_error& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what());
      }
    }
    mock->set_default(config_.classifier.default_response);
    owned_classifier_ = std::move(mock);
    classifier_ = owned_classifier_.get();
  }
  if (o.price_source) {
    price_source_ = o.price_source;
  } else {
    if (config_.price_source.mode != "mock") {
      throw Error(ErrorCode::ConfigInvalid, "price_source mode '" + config_.price_source.mode + "' is not available");
    }
    owned_price_source_ = config_.price_source.fixture_path.empty()
                              ? std::make_unique<pricing::MockPriceSource>()
                              : pricing::MockPriceSource::load(config_.price_source.fixture_path);
    price_source_ = owned_price_source_.get();
  }

  compliance::ClassifierSettings settings;
  settings.timeout = config_.classifier.timeout;
  if (!config_.classifier.system_prompt_path.empty()) {
    settings.system_prompt = read_text(config_.classifier.system_prompt_path, "system prompt");
  }

  ledger_ = std::make_unique<reputation::Ledger>(*store_, *clock_, config_.reputation);
  auth_ = std::make_unique<auth::AuthService>(*store_, *mailer_, *clock_, *random_, *ledger_, config_.auth);
  catalog_ = std::make_unique<catalog::Catalog>(*store_, *ledger_, *auth_, *blacklist_, *classifier_, *price_source_,
                                                *clock_, settings);
  transactions_ = std::make_unique<transactions::Transactions>(*store_, *auth_, *ledger_, *clock_);
}

}  // namespace market
