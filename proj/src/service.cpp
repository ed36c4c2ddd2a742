#include "subsnake/service.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <thread>

#include <httplib.h>

namespace subsnake {

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) clean.push_back(ch);
  }
  while (clean.size() % 4 != 0) clean.push_back('=');
  if (clean.empty()) return {};
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw InvalidInput("image is not valid base64");
  // EVP_DecodeBlock counts padding as zero bytes.
  const std::size_t pad = clean.size() - clean.find_last_not_of('=') - 1;
  out.resize(static_cast<std::size_t>(n) - std::min<std::size_t>(pad, 2));
  return out;
}

namespace {

// Looks a key up in body["params"] first, then in body.
const nlohmann::json* lookup(const nlohmann::json& body, const char* key) {
  if (body.contains("params") && body["params"].is_object() && body["params"].contains(key)) {
    return &body["params"][key];
  }
  if (body.contains(key)) return &body[key];
  return nullptr;
}

template <typename T>
T get_or(const nlohmann::json& body, const char* key, T fallback) {
  const auto* v = lookup(body, key);
  return v == nullptr ? fallback : v->get<T>();
}

GrayImage load_image_field(const nlohmann::json& image) {
  if (image.is_string()) return load_grayscale(image.get<std::string>());
  if (image.is_object() && image.contains("path")) {
    return load_grayscale(image["path"].get<std::string>());
  }
  if (image.is_object() && image.contains("base64")) {
    std::string data = image["base64"].get<std::string>();
    if (data.rfind("data:", 0) == 0) {
      const auto comma = data.find(',');
      data = comma == std::string::npos ? std::string() : data.substr(comma + 1);
    }
    const auto bytes = base64_decode(data);
    return decode_grayscale(bytes, "uploaded image");
  }
  throw InvalidInput("image must be a path string, {\"path\": ...} or {\"base64\": ...}");
}

Polarity parse_polarity(const std::string& text) {
  if (text == "dark") return Polarity::DarkObject;
  if (text == "bright") return Polarity::BrightObject;
  throw InvalidInput("polarity must be 'dark' or 'bright', got '" + text + "'");
}

nlohmann::json point_array(const std::vector<Point>& points) {
  auto out = nlohmann::json::array();
  for (const auto& p : points) out.push_back({p.x, p.y});
  return out;
}

}  // namespace

nlohmann::json SessionStore::create(const nlohmann::json& body) {
  if (!body.is_object()) throw InvalidInput("request body must be a JSON object");
  if (!body.contains("image")) throw InvalidInput("missing 'image'");
  std::unique_ptr<Optimizer> optimizer;
  try {
    const GrayImage image = load_image_field(body["image"]);
    image.validate();

    ControlPolygon user;
    user.scheme = Scheme::from_name(get_or<std::string>(body, "scheme", "four-point"),
                                    get_or<double>(body, "omega", Scheme::kDefaultOmega));
    const auto* points = lookup(body, "points");
    if (points == nullptr || !points->is_array()) throw InvalidInput("missing 'points'");
    for (const auto& p : *points) {
      if (!p.is_array() || p.size() != 2) throw InvalidInput("each point must be [row, col]");
      user.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    const ControlPolygon initial = prepare_initial(user, get_or<bool>(body, "points_are_targets", true));

    int q = get_or<int>(body, "filter_halfwidth", 0);
    if (q <= 0) q = default_filter_halfwidth(image.rows(), image.cols());
    const Polarity polarity = parse_polarity(get_or<std::string>(body, "polarity", "dark"));
    auto caches = std::make_shared<const ImageCaches>(ImageCaches::build(image, polarity, q));

    EnergyParams params;
    params.depth = get_or<int>(body, "depth", 4);
    if (params.depth < 1 || params.depth > 10) throw InvalidInput("depth must lie in [1, 10]");
    params.polarity = polarity;
    if (const auto* box = lookup(body, "box"); box != nullptr && !box->is_null()) {
      if (!box->is_array() || box->size() != 4) throw InvalidInput("box must be [r0, r1, c0, c1]");
      params.box = make_region_box(caches->prefix, (*box)[0].get<long>(), (*box)[1].get<long>(),
                                   (*box)[2].get<long>(), (*box)[3].get<long>());
    } else {
      params.box = full_image_box(caches->prefix);
    }

    OptimizerConfig config;
    config.alpha_mode = AlphaMode::parse(get_or<std::string>(body, "alpha", "two-phase"));
    config.max_iters = get_or<int>(body, "max_iters", config.max_iters);
    config.grad_tol = get_or<double>(body, "grad_tol", config.grad_tol);
    config.step_tol = get_or<double>(body, "step_tol", config.step_tol);
    config.stabilization_window =
        get_or<int>(body, "stabilization_window", config.stabilization_window);
    config.memory = get_or<int>(body, "memory", config.memory);

    optimizer = std::make_unique<Optimizer>(initial, params, config, std::move(caches));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed session request: ") + e.what());
  }

  auto session = std::make_shared<Session>();
  session->optimizer = std::move(optimizer);
  {
    std::lock_guard lock(mutex_);
    session->id = "s" + std::to_string(next_id_++);
    sessions_[session->id] = session;
  }
  const auto& caches = session->optimizer->caches();
  return {{"id", session->id},
          {"rows", caches.rows()},
          {"cols", caches.cols()},
          {"scheme", session->optimizer->polygon().scheme.name()}};
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionNotFound("no session '" + id + "'");
  return it->second;
}

nlohmann::json SessionStore::describe(const Session& session) {
  const Optimizer& opt = *session.optimizer;
  const auto& caches = opt.caches();
  const int depth = opt.params().depth;
  const CurveSample curve = evaluate_curve(opt.polygon(), *basic_table(opt.polygon().scheme, depth));

  nlohmann::json doc;
  doc["id"] = session.id;
  doc["rows"] = caches.rows();
  doc["cols"] = caches.cols();
  doc["scheme"] = opt.polygon().scheme.name();
  doc["status"] = to_string(opt.status());
  doc["iteration"] = opt.iteration();
  doc["phase"] = opt.phase();
  doc["alpha"] = opt.alpha();
  doc["alpha_mode"] = opt.config().alpha_mode.to_string();
  doc["memory"] = opt.memory_size();
  doc["polygon"] = point_array(opt.polygon().points);
  doc["curve"] = {{"depth", depth},
                  {"points", point_array(curve.points)},
                  {"tangents", point_array(curve.tangents)}};
  const auto& e = opt.current();
  double grad_norm = 0.0;
  for (double g : e.grad) grad_norm += g * g;
  doc["energies"] = {{"E_grad", e.gradient_term},
                     {"E_reg", e.region_term},
                     {"E_total", e.value},
                     {"grad_norm", std::sqrt(grad_norm)}};
  const auto& box = opt.params().box;
  doc["box"] = {box.row_min, box.row_max, box.col_min, box.col_max};

  auto boundary = nlohmann::json::array();
  for (const auto& px : rasterize_snake(curve.points, caches.rows(), caches.cols()).pixels) {
    boundary.push_back({px.edge, px.row, px.col, px.sign});
  }
  doc["boundary"] = std::move(boundary);

  auto trace = nlohmann::json::array();
  for (const auto& r : opt.trace().records) trace.push_back(to_json(r));
  doc["trace"] = std::move(trace);
  return doc;
}

nlohmann::json SessionStore::state(const std::string& id) const {
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  return describe(*session);
}

nlohmann::json SessionStore::step(const std::string& id, int n) {
  if (n < 0) throw InvalidInput("step count must be >= 0");
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  for (int i = 0; i < n && !session->optimizer->done(); ++i) session->optimizer->step();
  return describe(*session);
}

nlohmann::json SessionStore::move_point(const std::string& id, std::size_t index, double row,
                                        double col) {
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  session->optimizer->move_point(index, {row, col});
  return describe(*session);
}

nlohmann::json SessionStore::set_alpha(const std::string& id, const std::string& mode) {
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  session->optimizer->set_alpha_mode(AlphaMode::parse(mode));
  return describe(*session);
}

void SessionStore::remove(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (sessions_.erase(id) == 0) throw SessionNotFound("no session '" + id + "'");
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

struct HttpService::Impl {
  httplib::Server server;
  SessionStore store;
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& doc) {
  res.status = status;
  res.set_content(doc.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("request body is not JSON: ") + e.what());
  }
}

// Maps library errors onto HTTP status codes.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const SessionNotFound& e) {
      send_error(res, 404, e.what());
    } catch (const DegenerateRegion& e) {
      send_error(res, 422, e.what());
    } catch (const InvalidInput& e) {
      send_error(res, 400, e.what());
    } catch (const IoError& e) {
      send_error(res, 400, e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, std::string("malformed request: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

HttpService::HttpService() : impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  auto& store = impl_->store;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 201, store.create(parse_body(req)));
              }));
  server.Get(R"(/sessions/([^/]+))",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, store.state(req.matches[1]));
             }));
  server.Post(R"(/sessions/([^/]+)/step)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                send_json(res, 200, store.step(req.matches[1], body.value("n", 1)));
              }));
  server.Patch(R"(/sessions/([^/]+)/points)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 const long index = body.at("index").get<long>();
                 if (index < 0) throw InvalidInput("index must be >= 0");
                 send_json(res, 200,
                           store.move_point(req.matches[1], static_cast<std::size_t>(index),
                                            body.at("row").get<double>(),
                                            body.at("col").get<double>()));
               }));
  server.Post(R"(/sessions/([^/]+)/alpha)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                send_json(res, 200, store.set_alpha(req.matches[1], body.at("mode").get<std::string>()));
              }));
  server.Delete(R"(/sessions/([^/]+))",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                  store.remove(req.matches[1]);
                  res.status = 204;
                }));
}

HttpService::~HttpService() { stop(); }

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

void HttpService::wait_until_ready() const {
  while (!impl_->server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

SessionStore& HttpService::store() { return impl_->store; }

}  // namespace subsnake
