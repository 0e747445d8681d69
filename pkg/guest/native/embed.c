/*
 * In-process engine bridge: embeds the host-language runtime inside the
 * guest process and exposes the engine-channel API as direct calls.
 *
 * Per call the boundary carries integers and small arrays of doubles,
 * nothing framed or serialized.  The handle table lives here, ids never
 * reused, and a per-method counter is bumped on entry (success or not)
 * so engine_stats reports the same accounting the socket service does.
 *
 * Failures cross as exceptions with message "bridge:<code>:<detail>",
 * codes matching the wire protocol's error table.
 */

#define NAPI_VERSION 8
#include <node_api.h>

#include <Python.h>

#include <stdarg.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

enum {
    M_NEW_TRIAL,
    M_COPY,
    M_APPLY,
    M_LEGAL_MOVES,
    M_IS_TERMINAL,
    M_RETURNS,
    M_CURRENT_PLAYER,
    M_PLAYOUT,
    M_RELEASE,
    M_ENGINE_STATS,
    M_COUNT
};

static int g_ready = 0;
static PyObject *g_states = NULL; /* handle (int) -> game state */
static int64_t g_next_handle = 1;
static int64_t g_counts[M_COUNT];

static PyObject *g_parse_game_id = NULL;
static PyObject *g_new_trial = NULL;
static PyObject *g_legal_moves = NULL;
static PyObject *g_apply_move = NULL;
static PyObject *g_returns = NULL;
static PyObject *g_random_playout = NULL;
static PyObject *g_is_terminal = NULL;
static PyObject *g_invalid_game = NULL;
static PyObject *g_illegal_move = NULL;
static PyObject *g_not_terminal = NULL;

static void throw_bridge(napi_env env, int code, const char *fmt, ...)
{
    char detail[512];
    char message[576];
    va_list ap;

    va_start(ap, fmt);
    vsnprintf(detail, sizeof detail, fmt, ap);
    va_end(ap);
    snprintf(message, sizeof message, "bridge:%d:%s", code, detail);
    napi_throw_error(env, NULL, message);
}

/* Turn the pending Python exception into a thrown bridge error. */
static napi_value py_error_out(napi_env env)
{
    PyObject *type = NULL, *value = NULL, *tb = NULL;
    int code = 6;
    const char *text = "engine runtime failure";
    PyObject *rendered = NULL;

    PyErr_Fetch(&type, &value, &tb);
    PyErr_NormalizeException(&type, &value, &tb);
    if (type != NULL) {
        if (g_invalid_game && PyErr_GivenExceptionMatches(type, g_invalid_game))
            code = 5;
        else if (g_illegal_move && PyErr_GivenExceptionMatches(type, g_illegal_move))
            code = 4;
        else if (g_not_terminal && PyErr_GivenExceptionMatches(type, g_not_terminal))
            code = 3;
    }
    if (value != NULL) {
        rendered = PyObject_Str(value);
        if (rendered != NULL) {
            const char *u = PyUnicode_AsUTF8(rendered);
            if (u != NULL)
                text = u;
        }
    }
    if (code == 6 && type != NULL) {
        throw_bridge(env, 6, "%s: %s", ((PyTypeObject *)type)->tp_name, text);
    } else {
        throw_bridge(env, code, "%s", text);
    }
    Py_XDECREF(rendered);
    Py_XDECREF(type);
    Py_XDECREF(value);
    Py_XDECREF(tb);
    return NULL;
}

static PyObject *resolve(PyObject *mod, const char *name)
{
    PyObject *obj = PyObject_GetAttrString(mod, name);
    return obj; /* NULL leaves the Python error pending */
}

static int ensure_engine(napi_env env)
{
    PyObject *mod;

    if (g_ready)
        return 0;
    if (!Py_IsInitialized())
        Py_InitializeEx(0);
    mod = PyImport_ImportModule("bridgebench.games");
    if (mod == NULL) {
        py_error_out(env);
        return -1;
    }
    if ((g_parse_game_id = resolve(mod, "parse_game_id")) == NULL
        || (g_new_trial = resolve(mod, "new_trial")) == NULL
        || (g_legal_moves = resolve(mod, "legal_moves")) == NULL
        || (g_apply_move = resolve(mod, "apply_move")) == NULL
        || (g_returns = resolve(mod, "returns")) == NULL
        || (g_random_playout = resolve(mod, "random_playout")) == NULL
        || (g_is_terminal = resolve(mod, "is_terminal")) == NULL
        || (g_invalid_game = resolve(mod, "InvalidGameError")) == NULL
        || (g_illegal_move = resolve(mod, "IllegalMoveError")) == NULL
        || (g_not_terminal = resolve(mod, "NotTerminalError")) == NULL) {
        Py_DECREF(mod);
        py_error_out(env);
        return -1;
    }
    Py_DECREF(mod);
    g_states = PyDict_New();
    if (g_states == NULL) {
        py_error_out(env);
        return -1;
    }
    g_ready = 1;
    return 0;
}

static int get_args(napi_env env, napi_callback_info info, size_t want,
                    napi_value *argv)
{
    size_t argc = want;

    if (napi_get_cb_info(env, info, &argc, argv, NULL, NULL) != napi_ok
        || argc < want) {
        throw_bridge(env, 5, "missing arguments");
        return -1;
    }
    return 0;
}

/* Integer out of a JS value; mirrors the int-not-bool check host-side. */
static int as_int64(napi_env env, napi_value v, const char *what, int64_t *out)
{
    napi_valuetype t;
    double d;

    napi_typeof(env, v, &t);
    if (t != napi_number) {
        throw_bridge(env, 5, "%s must be an integer", what);
        return -1;
    }
    napi_get_value_double(env, v, &d);
    if (d != (double)(int64_t)d) {
        throw_bridge(env, 5, "%s must be an integer", what);
        return -1;
    }
    *out = (int64_t)d;
    return 0;
}

/* Borrowed state for a live handle, or NULL with a bridge error thrown. */
static PyObject *lookup(napi_env env, napi_value v, int64_t *hout)
{
    int64_t handle;
    PyObject *key, *state;

    if (as_int64(env, v, "handle", &handle) != 0)
        return NULL;
    key = PyLong_FromLongLong((long long)handle);
    if (key == NULL) {
        py_error_out(env);
        return NULL;
    }
    state = PyDict_GetItem(g_states, key); /* borrowed */
    Py_DECREF(key);
    if (state == NULL) {
        throw_bridge(env, 2, "no live handle %lld", (long long)handle);
        return NULL;
    }
    if (hout != NULL)
        *hout = handle;
    return state;
}

/* Store a state under a fresh handle; returns -1 on failure. */
static int64_t put_state(napi_env env, PyObject *state)
{
    int64_t handle = g_next_handle;
    PyObject *key = PyLong_FromLongLong((long long)handle);

    if (key == NULL) {
        py_error_out(env);
        return -1;
    }
    if (PyDict_SetItem(g_states, key, state) != 0) {
        Py_DECREF(key);
        py_error_out(env);
        return -1;
    }
    Py_DECREF(key);
    g_next_handle += 1;
    return handle;
}

static napi_value number_out(napi_env env, double v)
{
    napi_value out;

    napi_create_double(env, v, &out);
    return out;
}

static napi_value undefined_out(napi_env env)
{
    napi_value out;

    napi_get_undefined(env, &out);
    return out;
}

static napi_value do_init(napi_env env, napi_callback_info info)
{
    (void)info;
    if (ensure_engine(env) != 0)
        return NULL;
    return undefined_out(env);
}

static napi_value do_new_trial(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    napi_valuetype t;
    size_t len = 0;
    char *text;
    PyObject *gid, *state;
    int64_t handle;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_NEW_TRIAL] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    napi_typeof(env, argv[0], &t);
    if (t != napi_string) {
        throw_bridge(env, 5, "new_trial needs a game string");
        return NULL;
    }
    napi_get_value_string_utf8(env, argv[0], NULL, 0, &len);
    text = malloc(len + 1);
    if (text == NULL) {
        throw_bridge(env, 6, "out of memory");
        return NULL;
    }
    napi_get_value_string_utf8(env, argv[0], text, len + 1, &len);
    gid = PyObject_CallFunction(g_parse_game_id, "s", text);
    free(text);
    if (gid == NULL)
        return py_error_out(env);
    state = PyObject_CallFunctionObjArgs(g_new_trial, gid, NULL);
    Py_DECREF(gid);
    if (state == NULL)
        return py_error_out(env);
    handle = put_state(env, state);
    Py_DECREF(state);
    if (handle < 0)
        return NULL;
    return number_out(env, (double)handle);
}

static napi_value do_copy(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    PyObject *state;
    int64_t handle;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_COPY] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], NULL);
    if (state == NULL)
        return NULL;
    /* states are immutable host-side, so a copy is an alias */
    handle = put_state(env, state);
    if (handle < 0)
        return NULL;
    return number_out(env, (double)handle);
}

static napi_value do_apply(napi_env env, napi_callback_info info)
{
    napi_value argv[2];
    PyObject *state, *next, *key;
    int64_t handle, move;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_APPLY] += 1;
    if (get_args(env, info, 2, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], &handle);
    if (state == NULL)
        return NULL;
    if (as_int64(env, argv[1], "move", &move) != 0)
        return NULL;
    next = PyObject_CallFunction(g_apply_move, "OL", state, (long long)move);
    if (next == NULL)
        return py_error_out(env);
    key = PyLong_FromLongLong((long long)handle);
    if (key == NULL || PyDict_SetItem(g_states, key, next) != 0) {
        Py_XDECREF(key);
        Py_DECREF(next);
        return py_error_out(env);
    }
    Py_DECREF(key);
    Py_DECREF(next);
    return undefined_out(env);
}

static napi_value do_legal_moves(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    PyObject *state, *count;
    long n;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_LEGAL_MOVES] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], NULL);
    if (state == NULL)
        return NULL;
    count = PyObject_CallFunctionObjArgs(g_legal_moves, state, NULL);
    if (count == NULL)
        return py_error_out(env);
    n = PyLong_AsLong(count);
    Py_DECREF(count);
    if (n == -1 && PyErr_Occurred())
        return py_error_out(env);
    return number_out(env, (double)n);
}

static napi_value do_is_terminal(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    napi_value out;
    PyObject *state, *flag;
    int truth;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_IS_TERMINAL] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], NULL);
    if (state == NULL)
        return NULL;
    flag = PyObject_CallFunctionObjArgs(g_is_terminal, state, NULL);
    if (flag == NULL)
        return py_error_out(env);
    truth = PyObject_IsTrue(flag);
    Py_DECREF(flag);
    if (truth < 0)
        return py_error_out(env);
    napi_get_boolean(env, truth, &out);
    return out;
}

static napi_value pair_out(napi_env env, PyObject *tup, double extra, int with_extra)
{
    napi_value arr;
    int i;

    if (!PyTuple_Check(tup) || PyTuple_GET_SIZE(tup) != 2) {
        throw_bridge(env, 6, "engine returned a malformed utility pair");
        return NULL;
    }
    napi_create_array_with_length(env, with_extra ? 3 : 2, &arr);
    for (i = 0; i < 2; i++) {
        double u = PyFloat_AsDouble(PyTuple_GET_ITEM(tup, i));

        if (u == -1.0 && PyErr_Occurred())
            return py_error_out(env);
        napi_set_element(env, arr, i, number_out(env, u));
    }
    if (with_extra)
        napi_set_element(env, arr, 2, number_out(env, extra));
    return arr;
}

static napi_value do_returns(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    napi_value out;
    PyObject *state, *tup;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_RETURNS] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], NULL);
    if (state == NULL)
        return NULL;
    tup = PyObject_CallFunctionObjArgs(g_returns, state, NULL);
    if (tup == NULL)
        return py_error_out(env);
    out = pair_out(env, tup, 0.0, 0);
    Py_DECREF(tup);
    return out;
}

static napi_value do_current_player(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    PyObject *state, *mover;
    long player;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_CURRENT_PLAYER] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], NULL);
    if (state == NULL)
        return NULL;
    mover = PyObject_GetAttrString(state, "mover");
    if (mover == NULL)
        return py_error_out(env);
    player = PyLong_AsLong(mover);
    Py_DECREF(mover);
    if (player == -1 && PyErr_Occurred())
        return py_error_out(env);
    return number_out(env, (double)player);
}

static napi_value do_playout(napi_env env, napi_callback_info info)
{
    napi_value argv[3];
    napi_value out;
    PyObject *state, *seed_obj, *res, *plies_obj;
    int64_t hi, lo;
    uint64_t seed;
    long plies;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_PLAYOUT] += 1;
    if (get_args(env, info, 3, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], NULL);
    if (state == NULL)
        return NULL;
    if (as_int64(env, argv[1], "seed half", &hi) != 0
        || as_int64(env, argv[2], "seed half", &lo) != 0)
        return NULL;
    if (hi < 0 || hi > 0xffffffffLL || lo < 0 || lo > 0xffffffffLL) {
        throw_bridge(env, 5, "seed half out of range");
        return NULL;
    }
    seed = ((uint64_t)hi << 32) | (uint64_t)lo;
    seed_obj = PyLong_FromUnsignedLongLong(seed);
    if (seed_obj == NULL)
        return py_error_out(env);
    res = PyObject_CallFunctionObjArgs(g_random_playout, state, seed_obj, NULL);
    Py_DECREF(seed_obj);
    if (res == NULL)
        return py_error_out(env);
    if (!PyTuple_Check(res) || PyTuple_GET_SIZE(res) != 2) {
        Py_DECREF(res);
        throw_bridge(env, 6, "engine returned a malformed playout result");
        return NULL;
    }
    plies_obj = PyTuple_GET_ITEM(res, 1);
    plies = PyLong_AsLong(plies_obj);
    if (plies == -1 && PyErr_Occurred()) {
        Py_DECREF(res);
        return py_error_out(env);
    }
    out = pair_out(env, PyTuple_GET_ITEM(res, 0), (double)plies, 1);
    Py_DECREF(res);
    return out;
}

static napi_value do_release(napi_env env, napi_callback_info info)
{
    napi_value argv[1];
    PyObject *state, *key;
    int64_t handle;

    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_RELEASE] += 1;
    if (get_args(env, info, 1, argv) != 0)
        return NULL;
    state = lookup(env, argv[0], &handle);
    if (state == NULL)
        return NULL;
    key = PyLong_FromLongLong((long long)handle);
    if (key == NULL || PyDict_DelItem(g_states, key) != 0) {
        Py_XDECREF(key);
        return py_error_out(env);
    }
    Py_DECREF(key);
    return undefined_out(env);
}

/* [live_handles, then per-method counts in declaration order] */
static napi_value do_stats(napi_env env, napi_callback_info info)
{
    napi_value arr;
    int i;

    (void)info;
    if (ensure_engine(env) != 0)
        return NULL;
    g_counts[M_ENGINE_STATS] += 1;
    napi_create_array_with_length(env, 1 + M_COUNT, &arr);
    napi_set_element(env, arr, 0,
                     number_out(env, (double)PyDict_Size(g_states)));
    for (i = 0; i < M_COUNT; i++)
        napi_set_element(env, arr, 1 + i, number_out(env, (double)g_counts[i]));
    return arr;
}

static napi_value module_init(napi_env env, napi_value exports)
{
    const napi_property_descriptor props[] = {
        {"init", NULL, do_init, NULL, NULL, NULL, napi_default, NULL},
        {"newTrial", NULL, do_new_trial, NULL, NULL, NULL, napi_default, NULL},
        {"copy", NULL, do_copy, NULL, NULL, NULL, napi_default, NULL},
        {"apply", NULL, do_apply, NULL, NULL, NULL, napi_default, NULL},
        {"legalMoves", NULL, do_legal_moves, NULL, NULL, NULL, napi_default, NULL},
        {"isTerminal", NULL, do_is_terminal, NULL, NULL, NULL, napi_default, NULL},
        {"returnsU", NULL, do_returns, NULL, NULL, NULL, napi_default, NULL},
        {"currentPlayer", NULL, do_current_player, NULL, NULL, NULL, napi_default, NULL},
        {"playout", NULL, do_playout, NULL, NULL, NULL, napi_default, NULL},
        {"release", NULL, do_release, NULL, NULL, NULL, napi_default, NULL},
        {"stats", NULL, do_stats, NULL, NULL, NULL, napi_default, NULL},
    };

    napi_define_properties(env, exports,
                           sizeof props / sizeof props[0], props);
    return exports;
}

NAPI_MODULE(bridge_embed, module_init)
