#include "doccat/service/api.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "doccat/common/error.hpp"
#include "doccat/worker/runners.hpp"

namespace doccat::service {

using nlohmann::json;
using repo::Id;

namespace {

constexpr const char* kRealm = "Basic realm=\"classification-service\"";

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

ApiResponse json_response(int status, const json& body) { return {status, "application/json", dump(body), {}}; }

ApiResponse created_response(int status, const std::string& location, const json& body) {
  auto r = json_response(status, body);
  r.headers.emplace_back("Location", location);
  return r;
}

ApiResponse no_content() { return {204, "", "", {}}; }

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"status", status}, {"error", message}});
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }
json nullable(const std::optional<Id>& v) { return v ? json(*v) : json(nullptr); }

json parse_body(const ApiRequest& req) {
  if (req.body.empty()) throw InvalidArgument("request body must be JSON");
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
}

json parse_object(const ApiRequest& req) {
  auto j = parse_body(req);
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  return j;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvalidArgument(fmt::format("'{}' must be a string", key));
  return it->get<std::string>();
}

Id as_id(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw InvalidArgument(fmt::format("'{}' must be a non-negative integer id", key));
  }
  return v.get<Id>();
}

Id require_id(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw InvalidArgument(fmt::format("'{}' is required", key));
  return as_id(*it, key);
}

std::vector<Id> require_ids(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw InvalidArgument(fmt::format("'{}' must be an array of ids", key));
  std::vector<Id> out;
  for (const auto& v : *it) out.push_back(as_id(v, key));
  return out;
}

std::optional<std::size_t> query_size(const ApiRequest& req, const char* key) {
  const auto it = req.query.find(key);
  if (it == req.query.end() || it->second.empty()) return std::nullopt;
  std::size_t out = 0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw InvalidArgument(fmt::format("query parameter '{}' must be a non-negative integer", key));
  }
  return out;
}

repo::Paging paging(const ApiRequest& req) { return {query_size(req, "offset").value_or(0), query_size(req, "limit")}; }

repo::Filter filter(const ApiRequest& req) {
  const auto it = req.query.find("code");
  if (it == req.query.end()) return {};
  return {it->second};
}

template <typename T, typename F>
json page_json(const repo::Page<T>& page, const repo::Paging& p, F&& dto) {
  json items = json::array();
  for (const auto& item : page.items) items.push_back(dto(item));
  return {{"items", std::move(items)},
          {"total", page.total},
          {"offset", p.offset},
          {"limit", p.limit ? json(*p.limit) : json(nullptr)}};
}

// Re-raises a missing body reference as a client error.
template <typename F>
auto referenced(F&& lookup) {
  try {
    return lookup();
  } catch (const NotFoundError& e) {
    throw InvalidArgument(e.what());
  }
}

std::string collection_href(Id id) { return fmt::format("/collections/{}/", id); }
std::string document_href(Id cid, Id id) { return fmt::format("/collections/{}/documents/{}/", cid, id); }
std::string schema_href(Id id) { return fmt::format("/schemas/{}/", id); }
std::string set_href(Id id) { return fmt::format("/classificationsets/{}/", id); }
std::string trainer_href(Id id) { return fmt::format("/trainers/{}/", id); }
std::string classifier_href(Id id) { return fmt::format("/classifiers/{}/", id); }
std::string training_href(Id cid, Id sid) { return fmt::format("/classifiers/{}/trainings/{}/", cid, sid); }

json collection_dto(const repo::CollectionRecord& c) {
  return {{"href", collection_href(c.id)},
          {"id", c.id},
          {"code", nullable(c.code)},
          {"name", nullable(c.name)},
          {"created", c.created},
          {"documents", collection_href(c.id) + "documents/"}};
}

json document_dto(const repo::DocumentRecord& d) {
  const auto href = document_href(d.collection_id, d.id);
  return {{"href", href},
          {"id", d.id},
          {"collectionId", d.collection_id},
          {"code", nullable(d.fields.code)},
          {"name", nullable(d.fields.name)},
          {"language", nullable(d.fields.language)},
          {"publicationDate", nullable(d.fields.publication_date)},
          {"abstract", nullable(d.fields.abstract)},
          {"hasContent", d.path.has_value()},
          {"content", href + "content"},
          {"created", d.created}};
}

json schema_summary(const repo::SchemaRecord& s) {
  return {{"href", schema_href(s.id)},
          {"id", s.id},
          {"code", nullable(s.code)},
          {"name", nullable(s.name)},
          {"created", s.created}};
}

json set_dto(const repo::ClassificationSetRecord& s) {
  return {{"href", set_href(s.id)},
          {"id", s.id},
          {"code", nullable(s.code)},
          {"name", nullable(s.name)},
          {"collectionId", s.collection_id},
          {"schemaId", s.schema_id},
          {"labels", set_href(s.id) + "labels/"},
          {"created", s.created}};
}

json trainer_dto(const repo::TrainerRecord& t) {
  return {{"href", trainer_href(t.id)}, {"id", t.id}, {"code", t.type}, {"name", nullable(t.name)}};
}

json classifier_dto(const repo::ClassifierRecord& c) {
  return {{"href", classifier_href(c.id)},
          {"id", c.id},
          {"code", nullable(c.code)},
          {"name", nullable(c.name)},
          {"attributeId", c.attribute_id},
          {"activeCheckpointId", nullable(c.active_checkpoint_id)},
          {"trainings", classifier_href(c.id) + "trainings/"},
          {"created", c.created}};
}

json checkpoint_dto(const repo::CheckpointRecord& c) {
  return {{"id", c.id},
          {"name", c.name},
          {"epoch", c.epoch},
          {"created", c.created},
          {"statistics", c.statistics},
          {"score", c.score}};
}

double fallback_progress(repo::TaskState state) { return state == repo::TaskState::success ? 1.0 : 0.0; }

struct Route {
  std::regex pattern;
  std::map<std::string, std::function<ApiResponse(const ApiRequest&, const std::vector<Id>&)>> methods;
};

}  // namespace

std::string ApiResponse::header(const std::string& name) const {
  for (const auto& [key, value] : headers) {
    const auto lower = [](unsigned char c) { return std::tolower(c); };
    if (std::ranges::equal(key, name, {}, lower, lower)) return value;
  }
  return {};
}

std::string basic_authorization(const std::string& user, const std::string& password) {
  return httplib::make_basic_authentication_header(user, password).second;
}

struct Api::Impl {
  worker::WorkerPool& pool;
  repo::Repository& repo;
  ApiOptions options;
  std::set<std::string> accepted;
  std::vector<Route> routes;

  Impl(worker::WorkerPool& p, ApiOptions o) : pool(p), repo(p.queue().repository()), options(std::move(o)) {
    for (const auto& [user, password] : options.users) accepted.insert(basic_authorization(user, password));
    build_routes();
  }

  template <typename M>
  auto bind(M method) {
    return [this, method](const ApiRequest& req, const std::vector<Id>& ids) { return (this->*method)(req, ids); };
  }

  void build_routes() {
    const auto add = [this](const char* pattern, auto methods) {
      routes.push_back({std::regex(pattern), std::move(methods)});
    };
    using Methods = std::map<std::string, std::function<ApiResponse(const ApiRequest&, const std::vector<Id>&)>>;
    add(R"(/collections)", Methods{{"GET", bind(&Impl::list_collections)}, {"POST", bind(&Impl::create_collection)}});
    add(R"(/collections/(\d+))",
        Methods{{"GET", bind(&Impl::get_collection)}, {"DELETE", bind(&Impl::delete_collection)}});
    add(R"(/collections/(\d+)/documents)",
        Methods{{"GET", bind(&Impl::list_documents)}, {"POST", bind(&Impl::create_document)}});
    add(R"(/collections/(\d+)/documents/(\d+))",
        Methods{{"GET", bind(&Impl::get_document)}, {"DELETE", bind(&Impl::delete_document)}});
    add(R"(/collections/(\d+)/documents/(\d+)/content)", Methods{{"GET", bind(&Impl::get_content)},
                                                               {"POST", bind(&Impl::put_content)},
                                                               {"PUT", bind(&Impl::put_content)}});
    add(R"(/schemas)", Methods{{"GET", bind(&Impl::list_schemas)}, {"POST", bind(&Impl::create_schema)}});
    add(R"(/schemas/(\d+))", Methods{{"GET", bind(&Impl::get_schema)}, {"DELETE", bind(&Impl::delete_schema)}});
    add(R"(/classificationsets)", Methods{{"GET", bind(&Impl::list_sets)}, {"POST", bind(&Impl::create_set)}});
    add(R"(/classificationsets/(\d+))", Methods{{"GET", bind(&Impl::get_set)}, {"DELETE", bind(&Impl::delete_set)}});
    add(R"(/classificationsets/(\d+)/labels)",
        Methods{{"GET", bind(&Impl::list_labels)}, {"POST", bind(&Impl::add_labels)}});
    add(R"(/classificationsets/(\d+)/labels/(\d+))",
        Methods{{"GET", bind(&Impl::get_document_labels)}, {"DELETE", bind(&Impl::delete_document_labels)}});
    add(R"(/trainers)", Methods{{"GET", bind(&Impl::list_trainers)}});
    add(R"(/trainers/(\d+))", Methods{{"GET", bind(&Impl::get_trainer)}});
    add(R"(/classifiers)", Methods{{"GET", bind(&Impl::list_classifiers)}, {"POST", bind(&Impl::create_classifier)}});
    add(R"(/classifiers/(\d+))",
        Methods{{"GET", bind(&Impl::get_classifier)}, {"DELETE", bind(&Impl::delete_classifier)}});
    add(R"(/classifiers/(\d+)/trainings)",
        Methods{{"GET", bind(&Impl::list_trainings)}, {"POST", bind(&Impl::start_training)}});
    add(R"(/classifiers/(\d+)/trainings/(\d+))", Methods{{"GET", bind(&Impl::get_training)}});
    add(R"(/classification_requests)", Methods{{"POST", bind(&Impl::classify)}});
  }

  bool authorized(const ApiRequest& req) const { return !options.auth || accepted.contains(req.authorization); }

  ApiResponse dispatch(const ApiRequest& req) {
    std::string path = req.path;
    while (path.size() > 1 && path.back() == '/') path.pop_back();
    const std::string method = req.method == "HEAD" ? "GET" : req.method;
    for (const auto& route : routes) {
      std::smatch m;
      if (!std::regex_match(path, m, route.pattern)) continue;
      const auto it = route.methods.find(method);
      if (it == route.methods.end()) {
        std::string allow;
        for (const auto& [name, _] : route.methods) allow += (allow.empty() ? "" : ", ") + name;
        auto r = error_response(405, fmt::format("method {} is not allowed on {}", req.method, req.path));
        r.headers.emplace_back("Allow", allow);
        return r;
      }
      std::vector<Id> ids;
      for (std::size_t i = 1; i < m.size(); ++i) {
        const std::string s = m[i].str();
        Id id = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
        if (ec != std::errc{}) throw NotFoundError(fmt::format("no resource at {}", req.path));
        ids.push_back(id);
      }
      return it->second(req, ids);
    }
    return error_response(404, fmt::format("no resource at {}", req.path));
  }

  // Collections and documents

  ApiResponse list_collections(const ApiRequest& req, const std::vector<Id>&) {
    const auto p = paging(req);
    return json_response(200, page_json(repo.list_collections(p, filter(req)), p, collection_dto));
  }

  ApiResponse create_collection(const ApiRequest& req, const std::vector<Id>&) {
    const auto body = parse_object(req);
    const auto c = repo.create_collection(opt_string(body, "code"), opt_string(body, "name"));
    return created_response(201, collection_href(c.id), collection_dto(c));
  }

  ApiResponse get_collection(const ApiRequest&, const std::vector<Id>& ids) {
    return json_response(200, collection_dto(repo.get_collection(ids[0])));
  }

  ApiResponse delete_collection(const ApiRequest&, const std::vector<Id>& ids) {
    repo.delete_collection(ids[0]);
    return no_content();
  }

  ApiResponse list_documents(const ApiRequest& req, const std::vector<Id>& ids) {
    const auto p = paging(req);
    return json_response(200, page_json(repo.list_documents(ids[0], p, filter(req)), p, document_dto));
  }

  ApiResponse create_document(const ApiRequest& req, const std::vector<Id>& ids) {
    const auto body = parse_object(req);
    repo::DocumentFields fields{opt_string(body, "code"), opt_string(body, "name"), opt_string(body, "language"),
                                opt_string(body, "publicationDate"), opt_string(body, "abstract")};
    const auto d = repo.create_document(ids[0], fields);
    return created_response(201, document_href(d.collection_id, d.id), document_dto(d));
  }

  repo::DocumentRecord document_in(Id collection_id, Id document_id) {
    auto d = repo.get_document(document_id);
    if (d.collection_id != collection_id) {
      throw NotFoundError(fmt::format("document {} is not in collection {}", document_id, collection_id));
    }
    return d;
  }

  ApiResponse get_document(const ApiRequest&, const std::vector<Id>& ids) {
    return json_response(200, document_dto(document_in(ids[0], ids[1])));
  }

  ApiResponse delete_document(const ApiRequest&, const std::vector<Id>& ids) {
    repo.delete_document(document_in(ids[0], ids[1]).id);
    return no_content();
  }

  ApiResponse get_content(const ApiRequest&, const std::vector<Id>& ids) {
    const auto d = document_in(ids[0], ids[1]);
    return {200, "text/plain; charset=utf-8", repo.load_document_content(d.id), {}};
  }

  ApiResponse put_content(const ApiRequest& req, const std::vector<Id>& ids) {
    repo.store_document_content(document_in(ids[0], ids[1]).id, req.body);
    return no_content();
  }

  // Schemas

  json schema_detail(const repo::SchemaRecord& s) {
    json attributes = json::array();
    for (const auto& a : repo.attributes(s.id)) {
      json values = json::array();
      for (const auto& v : repo.attribute_values(a.id)) {
        values.push_back({{"id", v.id}, {"code", v.code}, {"name", nullable(v.name)}});
      }
      attributes.push_back(
          {{"id", a.id}, {"code", nullable(a.code)}, {"name", nullable(a.name)}, {"values", std::move(values)}});
    }
    auto j = schema_summary(s);
    j["attributes"] = std::move(attributes);
    return j;
  }

  ApiResponse list_schemas(const ApiRequest& req, const std::vector<Id>&) {
    const auto p = paging(req);
    return json_response(200, page_json(repo.list_schemas(p, filter(req)), p, schema_summary));
  }

  ApiResponse create_schema(const ApiRequest& req, const std::vector<Id>&) {
    const auto body = parse_object(req);
    repo::SchemaInput input{opt_string(body, "code"), opt_string(body, "name"), {}};
    const auto attributes = body.find("attributes");
    if (attributes == body.end() || !attributes->is_array() || attributes->empty()) {
      throw InvalidArgument("'attributes' must be a non-empty array");
    }
    for (const auto& a : *attributes) {
      if (!a.is_object()) throw InvalidArgument("every attribute must be an object");
      repo::AttributeInput attribute{opt_string(a, "code"), opt_string(a, "name"), {}};
      const auto values = a.find("values");
      if (values == a.end() || !values->is_array()) throw InvalidArgument("attribute 'values' must be an array");
      for (const auto& v : *values) {
        if (v.is_string()) {
          attribute.values.push_back({v.get<std::string>(), std::nullopt});
        } else if (v.is_object()) {
          const auto code = opt_string(v, "code");
          if (!code) throw InvalidArgument("attribute value objects need a 'code'");
          attribute.values.push_back({*code, opt_string(v, "name")});
        } else {
          throw InvalidArgument("attribute values must be strings or objects");
        }
      }
      input.attributes.push_back(std::move(attribute));
    }
    const auto s = repo.create_schema(input);
    return created_response(201, schema_href(s.id), schema_detail(s));
  }

  ApiResponse get_schema(const ApiRequest&, const std::vector<Id>& ids) {
    return json_response(200, schema_detail(repo.get_schema(ids[0])));
  }

  ApiResponse delete_schema(const ApiRequest&, const std::vector<Id>& ids) {
    repo.delete_schema(ids[0]);
    return no_content();
  }

  // Classification sets and labels

  ApiResponse list_sets(const ApiRequest& req, const std::vector<Id>&) {
    const auto p = paging(req);
    return json_response(200, page_json(repo.list_classification_sets(p, filter(req)), p, set_dto));
  }

  ApiResponse create_set(const ApiRequest& req, const std::vector<Id>&) {
    const auto body = parse_object(req);
    const Id collection = require_id(body, "collectionId");
    const Id schema = require_id(body, "schemaId");
    referenced([&] { return repo.get_collection(collection); });
    referenced([&] { return repo.get_schema(schema); });
    const auto s = repo.create_classification_set(collection, schema, opt_string(body, "code"), opt_string(body, "name"));
    return created_response(201, set_href(s.id), set_dto(s));
  }

  ApiResponse get_set(const ApiRequest&, const std::vector<Id>& ids) {
    return json_response(200, set_dto(repo.get_classification_set(ids[0])));
  }

  ApiResponse delete_set(const ApiRequest&, const std::vector<Id>& ids) {
    repo.delete_classification_set(ids[0]);
    return no_content();
  }

  // value id -> attribute id for every value of the schema
  std::map<Id, Id> value_attributes(Id schema_id) {
    std::map<Id, Id> out;
    for (const auto& a : repo.attributes(schema_id)) {
      for (const auto& v : repo.attribute_values(a.id)) out[v.id] = a.id;
    }
    return out;
  }

  json grouped_labels(const std::vector<repo::LabelRecord>& labels, const std::map<Id, Id>& attribute_of) {
    std::map<std::pair<Id, Id>, std::set<Id>> groups;
    for (const auto& l : labels) {
      groups[{l.document_id, attribute_of.at(l.attribute_value_id)}].insert(l.attribute_value_id);
    }
    json out = json::array();
    for (const auto& [key, values] : groups) {
      out.push_back({{"documentId", key.first}, {"attributeId", key.second}, {"valueIds", values}});
    }
    return out;
  }

  ApiResponse list_labels(const ApiRequest&, const std::vector<Id>& ids) {
    const auto set = repo.get_classification_set(ids[0]);
    return json_response(200, grouped_labels(repo.labels(set.id), value_attributes(set.schema_id)));
  }

  ApiResponse add_labels(const ApiRequest& req, const std::vector<Id>& ids) {
    const auto set = repo.get_classification_set(ids[0]);
    auto body = parse_body(req);
    if (body.is_object()) body = json::array({body});
    if (!body.is_array()) throw InvalidArgument("labels must be an array of objects");
    const auto attribute_of = value_attributes(set.schema_id);

    struct Item {
      Id document;
      std::vector<Id> values;
    };
    std::vector<Item> items;
    for (const auto& entry : body) {
      if (!entry.is_object()) throw InvalidArgument("every label must be an object");
      const Id document = require_id(entry, "documentId");
      const Id attribute = require_id(entry, "attributeId");
      const auto values = require_ids(entry, "valueIds");
      const auto a = referenced([&] { return repo.get_attribute(attribute); });
      if (a.schema_id != set.schema_id) {
        throw InvalidArgument(fmt::format("attribute {} is not part of schema {}", attribute, set.schema_id));
      }
      for (const Id v : values) {
        const auto it = attribute_of.find(v);
        if (it == attribute_of.end() || it->second != attribute) {
          throw InvalidArgument(fmt::format("attribute value {} does not belong to attribute {}", v, attribute));
        }
      }
      const auto d = referenced([&] { return repo.get_document(document); });
      if (d.collection_id != set.collection_id) {
        throw InvalidArgument(fmt::format("document {} is not in collection {}", document, set.collection_id));
      }
      items.push_back({document, values});
    }

    std::vector<repo::LabelRecord> touched;
    repo.transaction([&] {
      std::set<Id> documents;
      for (const auto& item : items) {
        repo.add_labels(set.id, item.document, item.values);
        documents.insert(item.document);
      }
      for (const Id d : documents) {
        const auto labels = repo.document_labels(set.id, d);
        touched.insert(touched.end(), labels.begin(), labels.end());
      }
    });
    return created_response(201, set_href(set.id) + "labels/", grouped_labels(touched, attribute_of));
  }

  ApiResponse get_document_labels(const ApiRequest&, const std::vector<Id>& ids) {
    const auto set = repo.get_classification_set(ids[0]);
    return json_response(200,
                         grouped_labels(repo.document_labels(set.id, ids[1]), value_attributes(set.schema_id)));
  }

  ApiResponse delete_document_labels(const ApiRequest&, const std::vector<Id>& ids) {
    const auto set = repo.get_classification_set(ids[0]);
    repo.delete_document_labels(set.id, ids[1]);
    return no_content();
  }

  // Trainers and classifiers

  ApiResponse list_trainers(const ApiRequest& req, const std::vector<Id>&) {
    const auto p = paging(req);
    return json_response(200, page_json(repo.list_trainers(p), p, trainer_dto));
  }

  ApiResponse get_trainer(const ApiRequest&, const std::vector<Id>& ids) {
    return json_response(200, trainer_dto(repo.get_trainer(ids[0])));
  }

  ApiResponse list_classifiers(const ApiRequest& req, const std::vector<Id>&) {
    const auto p = paging(req);
    return json_response(200, page_json(repo.list_classifiers(p, filter(req)), p, classifier_dto));
  }

  ApiResponse create_classifier(const ApiRequest& req, const std::vector<Id>&) {
    const auto body = parse_object(req);
    const Id attribute = require_id(body, "attributeId");
    referenced([&] { return repo.get_attribute(attribute); });
    const auto c = repo.create_classifier(attribute, opt_string(body, "code"), opt_string(body, "name"));
    return created_response(201, classifier_href(c.id), classifier_dto(c));
  }

  ApiResponse get_classifier(const ApiRequest&, const std::vector<Id>& ids) {
    return json_response(200, classifier_dto(repo.get_classifier(ids[0])));
  }

  ApiResponse delete_classifier(const ApiRequest&, const std::vector<Id>& ids) {
    repo.delete_classifier(ids[0]);
    return no_content();
  }

  ApiResponse start_training(const ApiRequest& req, const std::vector<Id>& ids) {
    const auto classifier = repo.get_classifier(ids[0]);
    const auto body = parse_object(req);
    const Id trainer = require_id(body, "trainerId");
    const Id set = require_id(body, "classificationSetId");
    referenced([&] { return repo.get_trainer(trainer); });
    referenced([&] { return repo.get_classification_set(set); });
    const json settings = body.value("settings", json(nullptr));
    const auto session = worker::submit_training(pool.queue(), classifier.id, set, trainer, settings);
    const auto href = training_href(classifier.id, session.id);
    return created_response(202, href, {{"href", href}, {"id", session.id}, {"task_id", session.task_id}});
  }

  json training_dto(const repo::TrainingSessionRecord& session) {
    const auto status = worker::query_task(pool.queue(), session.task_id);
    const auto& task = status.task;
    const worker::TaskProgress progress =
        task.progress.value_or(worker::TaskProgress{repo::task_state_name(task.state), fallback_progress(task.state)});
    json checkpoints = json::array();
    for (const auto& c : status.checkpoints) checkpoints.push_back(checkpoint_dto(c));
    const auto classifier = repo.get_classifier(session.classifier_id);
    json settings = json::parse(session.settings, nullptr, false);
    if (settings.is_discarded()) settings = nullptr;
    return {{"href", training_href(session.classifier_id, session.id)},
            {"id", session.id},
            {"classifierId", session.classifier_id},
            {"trainerId", session.trainer_id},
            {"classificationSetId", nullable(session.classification_set_id)},
            {"settings", std::move(settings)},
            {"state", repo::task_state_name(task.state)},
            {"progress", {{"current_action", {{"message", progress.message}, {"progress", progress.progress}}}}},
            {"checkpoints", std::move(checkpoints)},
            {"activeCheckpointId", nullable(classifier.active_checkpoint_id)},
            {"error", task.error.empty() ? json(nullptr) : json(task.error)},
            {"created", session.created}};
  }

  ApiResponse list_trainings(const ApiRequest&, const std::vector<Id>& ids) {
    const auto classifier = repo.get_classifier(ids[0]);
    json items = json::array();
    for (const auto& s : repo.training_sessions(classifier.id)) items.push_back(training_dto(s));
    return json_response(200, {{"items", items}, {"total", items.size()}, {"offset", 0}, {"limit", nullptr}});
  }

  ApiResponse get_training(const ApiRequest&, const std::vector<Id>& ids) {
    const auto classifier = repo.get_classifier(ids[0]);
    const auto session = repo.get_training_session(ids[1]);
    if (session.classifier_id != classifier.id) {
      throw NotFoundError(fmt::format("training {} does not belong to classifier {}", ids[1], ids[0]));
    }
    return json_response(200, training_dto(session));
  }

  // Classification

  ApiResponse classify(const ApiRequest& req, const std::vector<Id>&) {
    const auto body = parse_object(req);
    const Id classifier = require_id(body, "classifier_id");
    const auto documents = require_ids(body, "document_ids");
    const auto results = referenced([&] { return pool.classify(classifier, documents, options.classify_timeout); });
    return json_response(200, {{"classifier_id", classifier}, {"results", worker::to_json(results)}});
  }
};

Api::Api(worker::WorkerPool& pool, ApiOptions options) : impl_(std::make_unique<Impl>(pool, std::move(options))) {}

Api::~Api() = default;

ApiResponse Api::handle(const ApiRequest& request) {
  if (!impl_->authorized(request)) {
    auto r = error_response(401, "authentication required");
    r.headers.emplace_back("WWW-Authenticate", kRealm);
    return r;
  }
  try {
    return impl_->dispatch(request);
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  } catch (const ConflictError& e) {
    return error_response(409, e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  } catch (const ShapeError& e) {
    return error_response(400, e.what());
  } catch (const FormatError& e) {
    return error_response(400, e.what());
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  } catch (const InterruptedError& e) {
    return error_response(503, e.what());
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", request.method, request.path, e.what());
    return error_response(500, e.what());
  }
}

}  // namespace doccat::service
